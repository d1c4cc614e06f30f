"""冲突解脱方法"""
