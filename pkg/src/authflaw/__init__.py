"""Static detection of OAuth 2.0 authorization-server logic flaws."""

__version__ = "0.1.0"
