"""內建 scenario（.scn 文字檔）。"""
