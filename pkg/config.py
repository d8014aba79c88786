# -*- coding: utf-8 -*-

"""
配置模块
Config：应用级常量（日志、环境变量前缀、默认路径）
RunConfig：一次实验运行的分节配置（JSON 文件，每个模块一节）
"""
import os
import json
import hashlib
import logging
from dataclasses import dataclass, asdict, fields, replace

from constants import APP_NAME, APP_VERSION, VARIANT_ORDER
from control.trainer import QLearningConfig
from finetune.trainer import FinetuneConfig
from perception.trainer import PerceptionTrainConfig
from reacher.arm import ArmModel
from utils.errors import ReacherException, UsageError
from vision.camera import Camera
from vision.renderer import PerturbationSpec

logger = logging.getLogger(__name__)


class Config:
    # 应用程序配置
    APP_NAME = APP_NAME
    VERSION = APP_VERSION

    # 日志配置
    LOG_LEVEL = os.environ.get('REACHER_LOG_LEVEL', 'INFO')
    LOG_FILE = os.environ.get('REACHER_LOG_FILE', 'reacher.log')
    MAX_LOG_FILE_SIZE = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT = 5

    # 运行配置
    ENV_PREFIX = "REACHER_"
    DEFAULT_CONFIG_FILE = os.environ.get('REACHER_CONFIG', 'config/default_run.json')
    MANIFEST_FILE = "manifest.json"


class ConfigException(UsageError):
    """配置值非法"""


@dataclass
class PathSettings:
    """产物路径，均相对于输出目录"""
    out: str = "runs/default"
    dataset: str = "data/dataset.bin"
    checkpoints: str = "checkpoints"
    reports: str = "reports"
    logs: str = "logs"

    def validate(self):
        return [f"paths.{f.name} 不能为空" for f in fields(self) if not getattr(self, f.name)]

    def to_dict(self):
        return asdict(self)


@dataclass
class DatasetSettings:
    n_sim: int = 4000
    n_pseudo_real: int = 1418

    def validate(self):
        if self.n_sim < 0 or self.n_pseudo_real < 0:
            return ["dataset 数量不能为负"]
        return []

    def to_dict(self):
        return asdict(self)


@dataclass
class EvaluationSettings:
    trials: int = 400
    variants: tuple = VARIANT_ORDER
    format: str = "csv"

    def validate(self):
        errors = []
        if self.trials < 1:
            errors.append("evaluation.trials 必须 ≥ 1")
        unknown = [v for v in self.variants if v not in VARIANT_ORDER]
        if unknown:
            errors.append(f"未知评估对象 {unknown}，可选: {', '.join(VARIANT_ORDER)}")
        if self.format not in ("csv", "json"):
            errors.append("evaluation.format 必须为 csv 或 json")
        return errors

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "variants" in data:
            data["variants"] = tuple(data["variants"])
        return cls(**data)

    def to_dict(self):
        data = asdict(self)
        data["variants"] = list(self.variants)
        return data


SECTIONS = {
    "paths": PathSettings,
    "arm": ArmModel,
    "camera": Camera,
    "perturbation": PerturbationSpec,
    "dataset": DatasetSettings,
    "perception": PerceptionTrainConfig,
    "control": QLearningConfig,
    "finetune": FinetuneConfig,
    "evaluation": EvaluationSettings,
}

# 这些节的 seed 字段由顶层 seed 决定，不出现在配置文件中
SEEDED_SECTIONS = ("perception", "control", "finetune")


def _section_dict(section):
    data = section.to_dict()
    data.pop("seed", None)
    return data


def _build_section(name, data):
    cls = SECTIONS[name]
    defaults = _section_dict(cls())
    unknown = sorted(set(data) - set(defaults))
    if unknown:
        raise ConfigException(f"配置节 [{name}] 含未知键: {', '.join(unknown)}")
    merged = {**defaults, **data}
    try:
        if hasattr(cls, "from_dict"):
            return cls.from_dict(merged)
        return cls(**merged)
    except (TypeError, ValueError, ReacherException) as e:
        raise ConfigException(f"配置节 [{name}] 非法: {e}") from e


@dataclass
class RunConfig:
    """
    一次运行的全部配置

    文件格式为分节 JSON：顶层 seed 加每个模块一节，缺省键取默认值
    """
    seed: int = 0
    paths: PathSettings = None
    arm: ArmModel = None
    camera: Camera = None
    perturbation: PerturbationSpec = None
    dataset: DatasetSettings = None
    perception: PerceptionTrainConfig = None
    control: QLearningConfig = None
    finetune: FinetuneConfig = None
    evaluation: EvaluationSettings = None

    def __post_init__(self):
        for name, cls in SECTIONS.items():
            if getattr(self, name) is None:
                setattr(self, name, cls())
        for name in SEEDED_SECTIONS:
            setattr(self, name, replace(getattr(self, name), seed=self.seed))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigException("配置文件顶层必须是对象")
        unknown = sorted(set(data) - set(SECTIONS) - {"seed"})
        if unknown:
            raise ConfigException(f"未知配置节: {', '.join(unknown)}")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigException(f"seed 必须是非负整数: {seed!r}")
        sections = {}
        for name in SECTIONS:
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ConfigException(f"配置节 [{name}] 必须是对象")
            sections[name] = _build_section(name, section)
        return cls(seed=seed, **sections)

    def to_dict(self):
        data = {"seed": self.seed}
        for name in SECTIONS:
            data[name] = _section_dict(getattr(self, name))
        return data

    def with_seed(self, seed):
        return RunConfig.from_dict({**self.to_dict(), "seed": seed})

    def with_out(self, out):
        data = self.to_dict()
        data["paths"]["out"] = out
        return RunConfig.from_dict(data)

    def validate(self):
        """收集全部问题，非空时抛出 ConfigException"""
        errors = []
        for name in SECTIONS:
            section = getattr(self, name)
            if hasattr(section, "validate"):
                errors.extend(f"[{name}] {problem}" for problem in section.validate())
        if self.camera.resolution != 84:
            errors.append("[camera] resolution 必须为 84")
        if errors:
            raise ConfigException("; ".join(errors))
        return self

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def path(self, key):
        """产物的完整路径"""
        return os.path.join(self.paths.out, getattr(self.paths, key))

    def apply_env_overrides(self, environ=None):
        """
        应用环境变量覆盖：REACHER_SEED 与 REACHER_<节>__<键>

        值按 JSON 标量解析，失败时作为字符串

        Returns:
            RunConfig: 新配置
        """
        environ = os.environ if environ is None else environ
        data = self.to_dict()
        prefix = Config.ENV_PREFIX
        for key, raw in sorted(environ.items()):
            if not key.startswith(prefix):
                continue
            name = key[len(prefix):].lower()
            if name == "seed":
                data["seed"] = _parse_scalar(raw)
            elif "__" in name:
                section, option = name.split("__", 1)
                if section not in SECTIONS:
                    raise ConfigException(f"环境变量 {key} 指向未知配置节 [{section}]")
                data[section][option] = _parse_scalar(raw)
                logger.debug(f"环境变量覆盖 {section}.{option} = {raw}")
        return RunConfig.from_dict(data)

    @classmethod
    def load(cls, file_path=None):
        """
        从文件加载配置；未指定文件且默认文件不存在时使用默认配置

        Args:
            file_path (str): 配置文件路径
        """
        explicit = file_path is not None
        file_path = file_path or Config.DEFAULT_CONFIG_FILE
        if not os.path.exists(file_path):
            if explicit:
                raise ConfigException(f"配置文件不存在: {file_path}")
            logger.warning(f"配置文件 {file_path} 不存在，使用默认配置")
            return cls()
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigException(f"配置文件 {file_path} 解析失败: {e}") from e
        logger.info(f"配置已从 {file_path} 加载")
        return cls.from_dict(data)

    def save(self, file_path):
        directory = os.path.dirname(file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=4)
            f.write("\n")
        logger.info(f"配置已保存到 {file_path}")


def _parse_scalar(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw
