# Package marker so importlib.resources can locate the report templates
