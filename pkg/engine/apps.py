from django.apps import AppConfig


class EngineConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'engine'
    verbose_name = 'Discrete-event kernel'

    def ready(self):
        # Connect the trace writers to the lifecycle signals
        from engine import receivers  # noqa: F401
