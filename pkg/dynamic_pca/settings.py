import os

from flask import Config

SETTINGS_ENVVAR = 'DYNAMIC_PCA_SETTINGS'


def load_settings(overrides=None):
    """
    Returns a flask.Config populated from dynamic_pca.config, then from the
    Python file named by $DYNAMIC_PCA_SETTINGS (if set), then from the given
    overrides dict. For example:

        settings = load_settings({'DEFAULT_SEED': 7})
        settings['DEFAULT_REPETITIONS']  # 100 unless overridden in the file
    """
    settings = Config(os.getcwd())
    settings.from_object('dynamic_pca.config')
    settings.from_envvar(SETTINGS_ENVVAR, silent=True)
    if overrides:
        settings.update(**overrides)
    return settings
