"""
Phonetic Substitution Engine 測試套件
"""
