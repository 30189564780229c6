"""svglens: element-level ablation analysis and structural metrics for SVG."""

__version__ = "0.1.0"
