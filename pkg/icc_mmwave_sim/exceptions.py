class ConfigurationError(ValueError):
    """
    配置参数不合法（天线数不是平方数、速度过高导致 K_max = 0、扫描轴为空等）
    """


class NumericalFailure(RuntimeError):
    """
    接收机内部出现无法恢复的数值错误，当前试验会被标记并排除
    """
