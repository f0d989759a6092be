from django.apps import AppConfig


class CrdConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'crd'
    verbose_name = 'Color region description'
