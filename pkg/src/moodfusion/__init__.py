"""moodfusion: multimodal sequence classification with dynamic attention fusion."""

__version__ = "0.1.0"
