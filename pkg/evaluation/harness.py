# -*- coding: utf-8 -*-
"""
评估模块
试验批次运行、距离误差四分位与平均累计奖励统计、报告导出
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from constants import EPISODE_HORIZON
from reacher.arm import DEFAULT_ARM, DEFAULT_VIEWPORT, sample_task
from reacher.episode import distance_trace, run_episode
from utils.common_utils import derive_rng, ensure_parent_dir, write_csv
from utils.errors import DataError, UsageError
from vision.camera import DEFAULT_CAMERA

logger = logging.getLogger(__name__)

# 任务随机流编号，所有策略共用以保证配对比较
TASK_STREAM = 7

TRIAL_FIELDS = ["trial-id", "d_m", "d_cm", "d_px", "acc_reward"]
SUMMARY_FIELDS = ["nets", "d_med_cm", "d_med_px", "d_q3_cm", "d_q3_px", "rbar"]


@dataclass
class TrialReport:
    """单次试验：最终距离（米）、归一化累计奖励与逐步距离轨迹"""
    trial_id: int
    final_distance: float
    accumulated_reward: float
    distances: list = field(default_factory=list)
    failed: bool = False
    error: str = None

    @property
    def initial_distance(self):
        return self.distances[0] if self.distances else self.final_distance

    @property
    def closest_distance(self):
        return min(self.distances) if self.distances else self.final_distance


@dataclass
class CampaignSummary:
    """一组试验的统计：d_med、d_Q3（厘米与像素）、R̄ 与箱线图离群点"""
    name: str
    n: int
    n_failed: int
    d_min_cm: float
    d_q1_cm: float
    d_med_cm: float
    d_q3_cm: float
    d_max_cm: float
    d_med_px: float
    d_q3_px: float
    rbar: float
    whisker_low_cm: float
    whisker_high_cm: float
    outliers_cm: list = field(default_factory=list)

    def to_row(self):
        return {"nets": self.name, "d_med_cm": self.d_med_cm, "d_med_px": self.d_med_px,
                "d_q3_cm": self.d_q3_cm, "d_q3_px": self.d_q3_px, "rbar": self.rbar}


@dataclass
class Comparison:
    """a -> b 的百分比变化；分母为零时对应项为 None 并记录在 flags 中"""
    baseline: str
    candidate: str
    d_med_decrease_pct: float = None
    rbar_increase_pct: float = None
    flags: list = field(default_factory=list)


def run_campaign(policy, n, seed, arm=DEFAULT_ARM, viewport=DEFAULT_VIEWPORT, horizon=EPISODE_HORIZON):
    """
    运行 n 次试验

    每次试验的任务由 (seed, 试验编号) 派生，不同策略在相同 seed 下看到相同的任务序列；
    策略在试验中途出错时该试验记为失败，批次继续

    Args:
        policy: 状态 -> 动作
        n (int): 试验次数
        seed (int): 种子
        arm (ArmModel): 机械臂
        viewport (tuple): 目标采样视野
        horizon (int): 每次试验步数

    Returns:
        list[TrialReport]: 试验报告
    """
    if n < 1:
        raise UsageError(f"试验次数必须 ≥ 1: {n}")
    reports = []
    for trial_id in range(n):
        task = sample_task(derive_rng(seed, TASK_STREAM, trial_id), arm, viewport)
        try:
            transitions = run_episode(policy, task, horizon)
        except Exception as e:
            logger.warning(f"试验 {trial_id} 失败: {e}")
            reports.append(TrialReport(trial_id, task.distance, 0.0, [task.distance], True, str(e)))
            continue
        trace = distance_trace(task, transitions)
        acc = sum(t.reward for t in transitions) / horizon
        reports.append(TrialReport(trial_id, trace[-1], acc, trace))
    failed = sum(r.failed for r in reports)
    if failed:
        logger.warning(f"{failed}/{n} 次试验失败")
    return reports


def summarize(reports, camera=DEFAULT_CAMERA, name=""):
    """
    统计：中位数与第三四分位使用线性插值（type 7），R̄ 为平均累计奖励，
    像素 = 厘米 × px_per_cm，离群点为超出 1.5×IQR 的点

    Returns:
        CampaignSummary: 统计结果
    """
    if not reports:
        raise UsageError("至少需要一条试验报告")
    good = [r for r in reports if not r.failed]
    if not good:
        raise DataError(f"{name or '该批次'} 全部试验失败")
    d_cm = np.array([r.final_distance * 100.0 for r in good], dtype=np.float64)
    q1, med, q3 = (float(v) for v in np.quantile(d_cm, [0.25, 0.5, 0.75], method="linear"))
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = d_cm[(d_cm >= low_fence) & (d_cm <= high_fence)]
    outliers = sorted(float(v) for v in d_cm[(d_cm < low_fence) | (d_cm > high_fence)])
    return CampaignSummary(
        name=name,
        n=len(reports),
        n_failed=len(reports) - len(good),
        d_min_cm=float(d_cm.min()),
        d_q1_cm=q1,
        d_med_cm=med,
        d_q3_cm=q3,
        d_max_cm=float(d_cm.max()),
        d_med_px=camera.cm_to_px(med),
        d_q3_px=camera.cm_to_px(q3),
        rbar=float(np.mean([r.accumulated_reward for r in good])),
        whisker_low_cm=float(inside.min()) if inside.size else q1,
        whisker_high_cm=float(inside.max()) if inside.size else q3,
        outliers_cm=outliers,
    )


def compare(summary_a, summary_b):
    """
    百分比变化：d_med 下降 (a-b)/a，R̄ 上升 (b-a)/a

    Returns:
        Comparison: 比较结果
    """
    result = Comparison(summary_a.name, summary_b.name)
    if summary_a.d_med_cm == 0:
        result.flags.append("d_med_zero_baseline")
    else:
        result.d_med_decrease_pct = 100.0 * (summary_a.d_med_cm - summary_b.d_med_cm) / summary_a.d_med_cm
    if summary_a.rbar == 0:
        result.flags.append("rbar_zero_baseline")
    else:
        result.rbar_increase_pct = 100.0 * (summary_b.rbar - summary_a.rbar) / summary_a.rbar
    return result


def trial_rows(reports, camera=DEFAULT_CAMERA):
    return [{"trial-id": r.trial_id, "d_m": r.final_distance, "d_cm": r.final_distance * 100.0,
             "d_px": camera.cm_to_px(r.final_distance * 100.0), "acc_reward": r.accumulated_reward}
            for r in reports]


def boxplot_data(summaries, reports_by_name):
    """箱线图数据：每个网络的距离（厘米）、四分位、须与离群点"""
    entries = []
    for summary in summaries:
        reports = reports_by_name.get(summary.name, [])
        entries.append({
            "nets": summary.name,
            "distances_cm": [r.final_distance * 100.0 for r in reports if not r.failed],
            "q1_cm": summary.d_q1_cm,
            "median_cm": summary.d_med_cm,
            "q3_cm": summary.d_q3_cm,
            "whisker_low_cm": summary.whisker_low_cm,
            "whisker_high_cm": summary.whisker_high_cm,
            "outliers_cm": summary.outliers_cm,
        })
    return {"boxplots": entries}


def _jsonable(obj):
    if isinstance(obj, (TrialReport, CampaignSummary, Comparison)):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {key: _jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(item) for item in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def export_report(data, path, fmt="csv", camera=DEFAULT_CAMERA):
    """
    导出报告

    Args:
        data: TrialReport 列表（原始试验）、CampaignSummary 或其列表（汇总），
              或 Comparison / dict（仅 JSON）
        path (str): 输出路径
        fmt (str): "csv" 或 "json"

    Returns:
        str: 输出路径
    """
    if fmt not in ("csv", "json"):
        raise UsageError(f"未知报告格式: {fmt}")
    items = data if isinstance(data, (list, tuple)) else [data]
    try:
        if fmt == "json":
            ensure_parent_dir(path)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_jsonable(data), f, indent=2, ensure_ascii=False, sort_keys=True, allow_nan=False)
                f.write("\n")
        elif all(isinstance(item, TrialReport) for item in items):
            write_csv(path, trial_rows(items, camera), TRIAL_FIELDS)
        elif all(isinstance(item, CampaignSummary) for item in items):
            write_csv(path, [item.to_row() for item in items], SUMMARY_FIELDS)
        else:
            raise UsageError("CSV 只支持试验列表或汇总")
    except OSError as e:
        raise DataError(f"写入报告失败 {path}: {e}")
    logger.info(f"报告已导出: {path}")
    return str(path)


def load_report(path, fmt="csv"):
    """读取 export_report 写出的文件；CSV 中的数值列解析为 float"""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            if fmt == "json":
                return json.load(f)
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataError(f"读取报告失败 {path}: {e}")
    parsed = []
    for row in rows:
        parsed.append({key: (value if key == "nets" else
                             (int(value) if key == "trial-id" else float(value)))
                       for key, value in row.items()})
    return parsed
