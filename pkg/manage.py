#!/usr/bin/env python
"""
Entry point for the lab: run_plan, plot_summary, scene_gen, net_send,
net_proxy, net_recv, migrate and test.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lidar_attack_lab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Django is not importable. Install requirements.txt into the active "
            "virtual environment before running lab commands."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
