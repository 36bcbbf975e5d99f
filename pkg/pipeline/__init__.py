"""
Pipeline - configuration models, stage services and CLI commands for RankOOD
"""
