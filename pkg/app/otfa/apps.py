from django.apps import AppConfig


class OtfaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'otfa'
    verbose_name = 'One-shot training-free adaptation'
