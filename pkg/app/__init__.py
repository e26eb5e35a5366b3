# Wind + multi-module electrolyzer day-ahead scheduler
__version__ = "1.0.0"
