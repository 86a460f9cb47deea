"""Mixed policy gradient toolkit."""
