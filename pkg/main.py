# -*- coding: utf-8 -*-
"""
命令行入口
gen-data / train --stage {perception,control,finetune} / eval / pipeline
"""
import os
import sys
import json
import logging
import argparse
from pathlib import Path

# 将项目目录添加到Python路径中
project_dir = Path(__file__).parent.absolute()
if str(project_dir) not in sys.path:
    sys.path.insert(0, str(project_dir))

from config import Config, RunConfig
from constants import (EPISODE_HORIZON, ERROR_CHECKPOINT_NOT_FOUND, ERROR_DATASET_NOT_FOUND, ERROR_OUTPUT_EXISTS,
                       EXIT_OK, EXIT_TRIAL_FAILURE, LOG_STAGE_DONE, VARIANT_CR, VARIANT_FINETUNED,
                       VARIANT_INITIAL, VARIANT_LABELS, VARIANT_ORDER)
from control import CONTROL_NAME, cr_policy, select_best_control
from evaluation import boxplot_data, compare, export_report, run_campaign, summarize
from finetune import CombinedPolicy, combined_policy, finetune
from network import load_checkpoint, save_checkpoint
from perception import PERCEPTION_NAME, evaluate_perception, train_perception
from utils.common_utils import ensure_parent_dir, setup_logging, sha256_file
from utils.errors import DataError, DivergenceError, ReacherException, UsageError
from vision import build_dataset, dataset_context, load_dataset, save_dataset

logger = logging.getLogger(__name__)

STAGES = ("perception", "control", "finetune")
CHECKPOINT_FILES = {
    "perception": "perception.ckpt",
    "control": "control.ckpt",
    "finetune": "finetuned.ckpt",
}


class CliArgumentParser(argparse.ArgumentParser):
    """参数错误以 UsageError 抛出，统一映射为退出码 1"""

    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="运行配置文件（JSON）")
    common.add_argument("--seed", type=int, default=None, help="覆盖配置中的 seed")
    common.add_argument("--out", default=None, help="输出目录，覆盖 paths.out")
    common.add_argument("--force", action="store_true", help="允许覆盖已有产物")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = CliArgumentParser(prog=Config.APP_NAME, description="模块化视觉-运动策略：平面三自由度机械臂到达任务")
    sub = parser.add_subparsers(dest="command", parser_class=CliArgumentParser)
    sub.required = True
    sub.add_parser("gen-data", parents=[common], help="生成仿真与扰动域数据集")
    train = sub.add_parser("train", parents=[common], help="训练某一阶段")
    train.add_argument("--stage", required=True, help="perception | control | finetune")
    evaluate = sub.add_parser("eval", parents=[common], help="评估并导出报告")
    evaluate.add_argument("--variants", nargs="+", default=None,
                          help="initial finetuned cr 的子集，可用逗号分隔")
    sub.add_parser("pipeline", parents=[common], help="依次执行全部阶段")
    return parser


def load_run_config(args):
    config = RunConfig.load(args.config).apply_env_overrides()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.out is not None:
        config = config.with_out(args.out)
    return config.validate()


def checkpoint_path(config, stage):
    return os.path.join(config.path("checkpoints"), CHECKPOINT_FILES[stage])


def log_path(config, name):
    return os.path.join(config.path("logs"), name)


def _refuse_overwrite(path, force):
    if os.path.exists(path) and not force:
        raise DataError(f"{ERROR_OUTPUT_EXISTS}: {path}")


def _require(path, stage):
    if not os.path.exists(path):
        raise DataError(ERROR_CHECKPOINT_NOT_FOUND.format(stage=stage) + f": {path}")


def _load_dataset(config):
    path = config.path("dataset")
    if not os.path.exists(path):
        raise DataError(f"{ERROR_DATASET_NOT_FOUND}: {path}（请先运行 gen-data）")
    dataset = load_dataset(path)
    arm, camera, _ = dataset_context(dataset)
    if arm != config.arm or camera != config.camera:
        raise DataError(f"{path}: 数据集的机械臂或相机参数与当前配置不一致（请用 --force 重新生成）")
    return dataset


def _load_networks(config, stage):
    path = checkpoint_path(config, stage)
    _require(path, stage)
    networks, _ = load_checkpoint(path)
    return networks


def write_manifest(config, command, artifacts):
    """
    更新输出目录下的 manifest.json：配置哈希、seed 与每个产物的 sha256

    Args:
        config (RunConfig): 运行配置
        command (str): 本次命令
        artifacts (list[str]): 本次写出的文件
    """
    path = os.path.join(config.paths.out, Config.MANIFEST_FILE)
    manifest = {"artifacts": {}}
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    for artifact in artifacts:
        rel = os.path.relpath(artifact, config.paths.out).replace(os.sep, "/")
        manifest["artifacts"][rel] = sha256_file(artifact)
    manifest.update({"app": Config.APP_NAME, "version": Config.VERSION, "last_command": command,
                     "seed": config.seed, "config_hash": config.config_hash(), "config": config.to_dict()})
    ensure_parent_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


def cmd_gen_data(config, force=False):
    """生成数据集；已存在且未指定 --force 时拒绝"""
    path = config.path("dataset")
    _refuse_overwrite(path, force)
    dataset = build_dataset(config.dataset.n_sim, config.dataset.n_pseudo_real, config.seed,
                            config.arm, config.camera, config.perturbation)
    save_dataset(path, dataset)
    logger.info(f"{LOG_STAGE_DONE}: gen-data -> {path}")
    return [path]


def _train_perception(config, force):
    out = checkpoint_path(config, "perception")
    _refuse_overwrite(out, force)
    dataset = _load_dataset(config)
    train_set, validation = dataset.split(config.perception.validation_fraction, config.seed)
    curve = log_path(config, "perception_curve.csv")
    net, _ = train_perception(train_set, config.perception, validation=validation, curve_path=curve)
    mae = evaluate_perception(net, validation)
    logger.info(f"感知验证集各分量 MAE: {[round(float(v), 4) for v in mae]}")
    save_checkpoint(out, {PERCEPTION_NAME: net}, config.seed,
                    {"stage": "perception", "config_hash": config.config_hash(),
                     "validation_mae": [float(v) for v in mae]})
    return [out, curve]


def _train_control(config, force):
    out = checkpoint_path(config, "control")
    _refuse_overwrite(out, force)
    logs = log_path(config, "control_log.csv")
    net, best_seed, scores = select_best_control(config.control, config.arm, config.camera,
                                                 eval_trials=config.evaluation.trials, eval_seed=config.seed + 1,
                                                 log_path=logs)
    save_checkpoint(out, {CONTROL_NAME: net}, best_seed,
                    {"stage": "control", "config_hash": config.config_hash(),
                     "candidate_rbar": {str(k): v for k, v in scores.items()}})
    written = [out]
    if config.control.candidates == 1:
        written.append(logs)
    else:
        written.extend(logs.replace(".csv", f"_seed{seed}.csv") for seed in scores)
    return written


def _train_finetune(config, force):
    out = checkpoint_path(config, "finetune")
    _refuse_overwrite(out, force)
    for stage in ("perception", "control"):
        _require(checkpoint_path(config, stage), stage)
    policy = CombinedPolicy(_load_networks(config, "perception")[PERCEPTION_NAME],
                            _load_networks(config, "control")[CONTROL_NAME])
    dataset = _load_dataset(config)
    logs = log_path(config, "finetune_log.csv")
    result = finetune(policy, dataset, config.finetune, config.arm, config.camera, log_path=logs,
                      eval_seed=config.seed + 1)
    save_checkpoint(out, result.policy.networks(), config.seed,
                    {"stage": "finetune", "config_hash": config.config_hash(), "beta": config.finetune.beta,
                     "best_step": result.best_step, "diverged": result.diverged})
    if result.diverged:
        raise DivergenceError("finetune", result.best_step, None)
    return [out, logs]


def cmd_train(config, stage, force=False):
    """训练一个阶段并写出检查点与日志"""
    trainers = {"perception": _train_perception, "control": _train_control, "finetune": _train_finetune}
    if stage not in trainers:
        raise UsageError(f"未知阶段 {stage!r}，可选: {', '.join(STAGES)}")
    written = trainers[stage](config, force)
    logger.info(f"{LOG_STAGE_DONE}: train {stage}")
    return written


def parse_variants(values):
    """解析 --variants，按 Initial, Fine-tuned, CR 的固定顺序返回"""
    if not values:
        return list(VARIANT_ORDER)
    requested = [item.strip() for value in values for item in value.split(",") if item.strip()]
    unknown = [v for v in requested if v not in VARIANT_ORDER]
    if unknown or not requested:
        raise UsageError(f"未知评估对象 {unknown}，可选: {', '.join(VARIANT_ORDER)}")
    return [v for v in VARIANT_ORDER if v in requested]


def variant_policy(config, variant):
    """评估对象 -> 状态到动作的策略"""
    if variant == VARIANT_CR:
        return cr_policy(_load_networks(config, "control")[CONTROL_NAME], config.camera)
    if variant == VARIANT_INITIAL:
        policy = CombinedPolicy(_load_networks(config, "perception")[PERCEPTION_NAME],
                                _load_networks(config, "control")[CONTROL_NAME])
    else:
        policy = CombinedPolicy.from_networks(_load_networks(config, "finetune"))
    return combined_policy(policy, config.camera)


def cmd_eval(config, variants, force=False):
    """
    共享 seed 的评估批次，导出逐试验报告、汇总、箱线图数据与两两比较

    Returns:
        tuple: (写出的文件, 汇总列表, 是否有失败试验)
    """
    fmt = config.evaluation.format
    reports_dir = config.path("reports")
    summary_path = os.path.join(reports_dir, f"summary.{fmt}")
    _refuse_overwrite(summary_path, force)
    policies = {variant: variant_policy(config, variant) for variant in variants}

    written, summaries, reports_by_name = [], [], {}
    for variant in variants:
        name = VARIANT_LABELS[variant]
        reports = run_campaign(policies[variant], config.evaluation.trials, config.seed, config.arm,
                               config.camera.bounds(), EPISODE_HORIZON)
        summaries.append(summarize(reports, config.camera, name))
        reports_by_name[name] = reports
        written.append(export_report(reports, os.path.join(reports_dir, f"trials_{variant}.{fmt}"), fmt,
                                     config.camera))
    written.append(export_report(summaries, summary_path, fmt, config.camera))
    written.append(export_report(boxplot_data(summaries, reports_by_name),
                                 os.path.join(reports_dir, "boxplot.json"), "json"))
    if len(summaries) > 1:
        comparisons = [compare(a, b) for i, a in enumerate(summaries) for b in summaries[i + 1:]]
        written.append(export_report({"comparisons": comparisons},
                                     os.path.join(reports_dir, "comparison.json"), "json"))
    failed = any(s.n_failed for s in summaries)
    logger.info(f"{LOG_STAGE_DONE}: eval {', '.join(variants)}")
    return written, summaries, failed


def print_summary(summaries):
    print(f"{'nets':<12}{'d_med(cm)':>11}{'d_med(px)':>11}{'d_Q3(cm)':>10}{'d_Q3(px)':>10}{'R̄':>8}")
    for s in summaries:
        print(f"{s.name:<12}{s.d_med_cm:>11.3f}{s.d_med_px:>11.3f}{s.d_q3_cm:>10.3f}{s.d_q3_px:>10.3f}{s.rbar:>8.3f}")


def run_command(args):
    config = load_run_config(args)
    level = args.log_level or Config.LOG_LEVEL
    setup_logging(level, os.path.join(config.path("logs"), Config.LOG_FILE),
                  Config.MAX_LOG_FILE_SIZE, Config.LOG_BACKUP_COUNT)
    logger.info(f"{Config.APP_NAME} v{Config.VERSION} {args.command} seed={config.seed} "
                f"config={config.config_hash()[:12]}")

    exit_code = EXIT_OK
    if args.command == "gen-data":
        written = cmd_gen_data(config, args.force)
    elif args.command == "train":
        if args.stage not in STAGES:
            raise UsageError(f"未知阶段 {args.stage!r}，可选: {', '.join(STAGES)}")
        try:
            written = cmd_train(config, args.stage, args.force)
        except DivergenceError:
            if args.stage == "finetune" and os.path.exists(checkpoint_path(config, "finetune")):
                write_manifest(config, "train finetune", [checkpoint_path(config, "finetune")])
            raise
    elif args.command == "eval":
        variants = parse_variants(args.variants or list(config.evaluation.variants))
        written, summaries, failed = cmd_eval(config, variants, args.force)
        print_summary(summaries)
        if failed:
            exit_code = EXIT_TRIAL_FAILURE
    else:
        written = []
        if args.force or not os.path.exists(config.path("dataset")):
            written += cmd_gen_data(config, args.force)
        for stage in STAGES:
            written += cmd_train(config, stage, args.force)
        eval_written, summaries, failed = cmd_eval(config, parse_variants(list(config.evaluation.variants)),
                                                   args.force)
        written += eval_written
        print_summary(summaries)
        if failed:
            exit_code = EXIT_TRIAL_FAILURE
    command = args.command if args.command != "train" else f"train {args.stage}"
    write_manifest(config, command, written)
    return exit_code


def main(argv=None):
    """
    命令行主函数

    Returns:
        int: 退出码（0 成功，1 用法错误，2 数据错误，3 发散，4 存在失败试验）
    """
    try:
        args = build_parser().parse_args(argv)
        return run_command(args)
    except ReacherException as e:
        logger.error(f"{type(e).__name__}: {e}")
        logger.debug("详细堆栈", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
