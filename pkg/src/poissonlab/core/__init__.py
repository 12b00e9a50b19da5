"""
核心模組

包含例外階層、事件模型、執行設定、引擎抽象基類與共用 Protocols。
"""
