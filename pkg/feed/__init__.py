"""需求模型实现"""
