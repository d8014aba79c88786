#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
项目启动脚本
设置环境、检查依赖后转交 main.main，参数原样传递
"""

import sys
import os
from pathlib import Path

REQUIRED_PACKAGES = ("numpy", "psutil")


def setup_environment():
    """设置项目环境"""
    project_root = Path(__file__).parent.absolute()
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    os.chdir(project_root)
    return project_root


def check_dependencies():
    """检查依赖是否已安装"""
    missing = []
    for package in REQUIRED_PACKAGES:
        try:
            __import__(package)
        except ImportError:
            missing.append(package)
    if missing:
        print(f"❌ 缺少依赖: {', '.join(missing)}，请运行: pip install -r requirements.txt", file=sys.stderr)
        return False
    return True


def main():
    """主函数"""
    setup_environment()
    if not check_dependencies():
        sys.exit(1)
    from main import main as run_main
    sys.exit(run_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
