from django.apps import AppConfig


class NetproxyConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'netproxy'
    verbose_name = 'UDP stream proxy'
