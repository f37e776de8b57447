"""HTTP service, persistence orchestration and webhook dispatch."""
