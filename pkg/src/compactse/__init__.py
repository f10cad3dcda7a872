"""Classic and compact symbolic execution of small flowgraph programs."""
