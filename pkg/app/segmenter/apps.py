from django.apps import AppConfig


class SegmenterConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'segmenter'
    verbose_name = 'Language-driven segmentation model'
