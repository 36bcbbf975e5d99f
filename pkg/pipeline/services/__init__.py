"""Service layer for pipeline stages and run artifacts."""
