from django.apps import AppConfig


class MetricsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'metrics'
    verbose_name = 'Run accounting and reports'

    def ready(self):
        from metrics import receivers  # noqa: F401
