from django.apps import AppConfig


class OvfConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "ovf"
    verbose_name = "Orthogonal vector fields"
