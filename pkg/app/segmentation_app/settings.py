"""
Django settings for segmentation_app project.

The project has no web surface; Django provides the management command
CLI, configuration and the test runner.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-segmentation-desk-scale-not-served',
)

DEBUG = True

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'core',
    'crd',
    'segmenter',
    'otfa',
    'training',
    'evaluation',
]

MIDDLEWARE = [
    'django.middleware.common.CommonMiddleware',
]

# Only the test stub describer server routes requests; see crd/tests.
ROOT_URLCONF = None

# The live server test case wraps requests in a static files handler
# that needs a string prefix; the project serves no static files.
STATIC_URL = '/static/'


# Database
# No app declares tables. The in-memory database only backs the live
# server test case.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}


LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Django Rest Framework Settings
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'UNAUTHENTICATED_USER': None,
}


# Logging

LOG_LEVEL = os.environ.get('SEGMENTATION_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'crd', 'segmenter', 'otfa', 'training',
                    'evaluation')
    },
}


# Run configuration defaults. A JSON file passed with --config is merged
# over these, and command-line flags are merged over the file.

SEGMENTATION = {
    'seed': 0,
    'model': {
        'image_size': 64,
        'patch_size': 16,
        'vision_width': 64,
        'language_width': 128,
        'vision_depth': 2,
        'vision_heads': 4,
        'lm_depth': 4,
        'lm_heads': 4,
        'decoder_depth': 2,
        'refine_width': 32,
        'max_text_tokens': 96,
        'max_new_tokens': 32,
        'threshold': 0.5,
        'feedback_source': 'projection',
        'modalities': ['CT', 'MR', 'US', 'X-Ray', 'PET', 'Endoscopy',
                       'Dermoscopy', 'Fundus', 'Microscopy'],
    },
    'train': {
        'epochs': 5,
        'batch_size': 2,
        'learning_rate': 1e-3,
        'poly_power': 0.9,
        'grad_clip': 1.0,
        'text_weight': 1.0,
        'bce_weight': 1.0,
        'dice_weight': 1.0,
        'dice_smooth': 1e-5,
        'lora_rank': 0,
        'lora_alpha': 8.0,
    },
    'palette': {
        'background': [0, 0, 0],
        'colors': [],
    },
    'describer': {
        'endpoint': '',
        'timeout': 10.0,
        'retries': 2,
        'max_in_flight': 4,
        'prompt': (
            'Describe the shape and relative position of every colored '
            'region in this image.'
        ),
        'blocky_compactness': 0.75,
        'elongated_ratio': 3.0,
    },
    'eval': {
        'both_empty_dsc': 1.0,
        'loose_box_shift': 0.15,
        'prompt_modes': ['none', 'point', 'tight_box', 'loose_box'],
    },
    'paths': {
        'work_dir': os.environ.get('SEGMENTATION_WORK_DIR', 'work'),
    },
}
