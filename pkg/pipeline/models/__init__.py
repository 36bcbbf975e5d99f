"""
Pydantic domain models
"""
