"""eVTOL 动力与电池模型"""
