"""Repository pattern for data access."""
