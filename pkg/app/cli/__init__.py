from app.cli.classify import cmd_classify
from app.cli.framework_demo import cmd_framework_demo
from app.cli.oracle_check import cmd_oracle_check
from app.cli.sweep import cmd_sweep
from app.cli.time_series import cmd_time_series

__all__ = [
    "cmd_classify",
    "cmd_framework_demo",
    "cmd_oracle_check",
    "cmd_sweep",
    "cmd_time_series",
]
