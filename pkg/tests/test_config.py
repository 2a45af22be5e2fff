from matchmarket.config import Config, DevelopmentConfig, TestingConfig, get_config


def test_testing_config_is_selected_by_environment():
    assert get_config() is TestingConfig
    assert get_config().THREADS == 1


def test_unknown_name_falls_back_to_development():
    assert get_config('staging') is DevelopmentConfig


def test_thread_cap_never_drops_below_one():
    assert TestingConfig.thread_cap() == 1
    assert Config.thread_cap(4) == 4
    assert Config.thread_cap(0) == 1
