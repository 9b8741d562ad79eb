# coding=utf-8
"""
viscowell 主程序

奇异非局部粘弹性波动方程的模拟与势阱分析
支持: python -m viscowell <constants|simulate|classify|sweep|fit>

退出码:
    0  正常结束
    1  未预期的错误
    2  配置或输入文件错误
    3  检测到爆破
    4  数值失稳
    5  衰减拟合失败
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Dict, List, Optional

import numpy as np

from viscowell import __version__
from viscowell.analysis.decay_fitter import (
    check_envelope,
    envelope,
    fit_exponential,
    fit_polynomial,
    select_best_fit,
)
from viscowell.analysis.potential_well import WellConstants
from viscowell.context import AppContext
from viscowell.core import load_config
from viscowell.core.errors import (
    ConfigurationError,
    DataFileError,
    FitError,
    InvalidKernelError,
    InvalidParameterError,
    KernelRangeError,
    NumericInstabilityError,
    UnsupportedOperationError,
    ViscoWellError,
)
from viscowell.core.validators import parse_float_list
from viscowell.physics.energetics import energy_identity_residual
from viscowell.physics.kernels import check_mass_condition, mass_condition_threshold
from viscowell.physics.models import TERMINATION_BLOWUP, TERMINATION_INSTABILITY
from viscowell.physics.solver import certify_blowup, run
from viscowell.report.formatter import (
    format_classification,
    format_constants,
    format_fit,
    format_simulation,
    format_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_BLOWUP = 3
EXIT_INSTABILITY = 4
EXIT_FIT = 5

INPUT_ERRORS = (
    ConfigurationError,
    InvalidParameterError,
    DataFileError,
    InvalidKernelError,
    KernelRangeError,
    UnsupportedOperationError,
)


def _sweep_row(config: Dict, constants: WellConstants, amplitude: float) -> Dict:
    """
    扫描中的单个振幅（子进程入口，须为模块级函数）

    单组失败只记录在该行的 error 字段中。
    """
    row: Dict = {"amplitude": amplitude}
    try:
        ctx = AppContext(config)
        ctx.use_constants(constants)
        u0, u1 = ctx.initial_data(amplitude=amplitude)
        report = ctx.assess(u0, u1)
        row["E0"] = report.classification.E0
        row["I0"] = report.classification.I0
        row["classification"] = report.classification.tag
        if report.certificate is not None:
            row["Tstar_bound"] = report.certificate.Tstar_bound

        time_cfg = ctx.time_config
        trajectory = run(
            ctx.params, u0, u1, time_cfg["T"], ctx.dt, time_cfg["RECORD_EVERY"],
            ctx.analysis_config["BLOWUP_THRESHOLD_RATIO"],
        )
        row["outcome"] = trajectory.termination
        row["detected_time"] = trajectory.blowup_time
    except ViscoWellError as e:
        row["error"] = e.message
    except Exception as e:
        row["error"] = f"{type(e).__name__}: {e}"
    return row


class ExperimentRunner:
    """子命令执行器"""

    def __init__(self, config: Dict, output_dir: Optional[str] = None, jobs: int = 1):
        self.ctx = AppContext(config)
        if output_dir:
            self.ctx.set_output_dir(output_dir)
        self.jobs = max(1, jobs)

    # === constants ===

    def cmd_constants(self) -> int:
        ctx = self.ctx
        constants = ctx.well_constants
        p = ctx.problem_config["P"]
        data = {
            "l": constants.l,
            "C_p": constants.C_p,
            "C_star": constants.C_star,
            "d1": constants.d1,
            "p": p,
            "delta": constants.delta,
            "mass_threshold": mass_condition_threshold(p, constants.delta),
            "mass_ok": check_mass_condition(ctx.kernel, p, constants.delta),
            "kernel": ctx.kernel.to_dict(),
            "grid": ctx.grid.to_dict(),
        }
        path = ctx.storage.write_json(data, "constants.json")
        print(format_constants(data))
        print(f"已写入 {path}")
        return EXIT_OK

    # === simulate ===

    def cmd_simulate(self) -> int:
        ctx = self.ctx
        params = ctx.params
        time_cfg = ctx.time_config
        analysis_cfg = ctx.analysis_config
        u0, u1 = ctx.initial_data()
        report = ctx.assess(u0, u1)

        T, dt, record_every = time_cfg["T"], ctx.dt, time_cfg["RECORD_EVERY"]
        ratio = analysis_cfg["BLOWUP_THRESHOLD_RATIO"]
        trajectory = run(params, u0, u1, T, dt, record_every, ratio)

        identity = None
        if len(trajectory.records) >= 3:
            identity = energy_identity_residual(trajectory, params.kernel, params.a).max_residual

        check = None
        if trajectory.termination == TERMINATION_BLOWUP and analysis_cfg["CERTIFY_BLOWUP"]:
            check = certify_blowup(
                params, u0, u1, T, dt, record_every, ratio, detected_time=trajectory.blowup_time,
            )

        summary = {
            "version": __version__,
            "params": params.to_dict(),
            "run": trajectory.summary(),
            "classification": report.to_dict(),
            "detected_time": trajectory.blowup_time,
            "Tstar_bound": report.certificate.Tstar_bound if report.certificate else None,
            "energy_identity_max_residual": identity,
            "blowup_check": check.to_dict() if check else None,
        }
        ctx.storage.write_trajectory(trajectory)
        if trajectory.snapshots:
            ctx.storage.write_field_csv(params.grid, trajectory.snapshots[-1].u)
        path = ctx.storage.write_json(summary)
        print(format_simulation(summary))
        print(f"已写入 {path.parent}")

        if trajectory.termination == TERMINATION_BLOWUP:
            return EXIT_BLOWUP
        if trajectory.termination == TERMINATION_INSTABILITY:
            return EXIT_INSTABILITY
        return EXIT_OK

    # === classify ===

    def cmd_classify(self) -> int:
        ctx = self.ctx
        u0, u1 = ctx.initial_data()
        report = ctx.assess(u0, u1)
        data = report.to_dict()
        path = ctx.storage.write_json(data, "classify.json")
        print(format_classification(data))
        print(f"已写入 {path}")
        return EXIT_OK

    # === sweep ===

    def cmd_sweep(self, amplitudes: List[float]) -> int:
        if not amplitudes:
            raise InvalidParameterError("振幅列表为空", suggestion="请通过 --amplitudes 提供，如 0,0.5,1")
        ctx = self.ctx
        constants = ctx.well_constants
        worker = partial(_sweep_row, ctx.config, constants)

        print(f"开始扫描 {len(amplitudes)} 组振幅（并行度 {self.jobs}）...")
        if self.jobs > 1 and len(amplitudes) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as executor:
                rows = list(executor.map(worker, amplitudes))
        else:
            rows = [worker(a) for a in amplitudes]

        failed = sum(1 for row in rows if row.get("error"))
        if failed:
            logger.warning("%d 组运行失败，详见 phase.csv 的 error 列", failed)
        path = ctx.storage.write_phase_csv(rows)
        print(format_sweep(rows))
        print(f"已写入 {path}")
        return EXIT_OK

    # === fit ===

    def cmd_fit(self, trajectory_path: str) -> int:
        ctx = self.ctx
        data = ctx.storage.read_trajectory(trajectory_path)
        times, energies = data["t"], data["E"]
        r, xi = ctx.decay_model()
        t0 = ctx.analysis_config["FIT_T0"]
        slack = ctx.analysis_config["ENVELOPE_SLACK"]

        fits, failures = [], []
        for model, fitter in (
            ("exponential", lambda: fit_exponential(times, energies, xi, t0)),
            ("polynomial", lambda: fit_polynomial(times, energies, xi, r, t0)),
        ):
            try:
                fits.append(fitter())
            except FitError as e:
                failures.append({"model": model, "message": e.message, "indices": e.indices})
        if not fits:
            raise FitError(failures[0]["message"], indices=failures[0]["indices"])

        best = select_best_fit(fits)
        check = check_envelope(times, energies, best, slack=slack)
        window = times >= t0
        result = {
            "selected": best.to_dict(),
            "fits": [fit.to_dict() for fit in fits],
            "failures": failures,
            "slack": slack,
            "envelope": check.to_dict(),
        }
        path = ctx.storage.write_json(result, "fit.json")
        ctx.storage.write_envelope_csv(
            times[window], energies[window], np.asarray(envelope(best, times[window]), dtype=float),
        )
        print(format_fit(result))
        print(f"已写入 {path.parent}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viscowell",
        description="viscowell - 奇异非局部粘弹性波动方程的模拟与势阱分析",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  viscowell constants --config config/examples/stable.yaml
  viscowell simulate  --config config/examples/unstable.yaml --out output/unstable
  viscowell sweep     --config config/config.yaml --amplitudes 0,2,4,8,16 --jobs 4
  viscowell fit output/stable/trajectory.csv --config config/examples/stable.yaml
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="配置文件路径（默认 CONFIG_PATH 或 config/config.yaml）")
    parser.add_argument("--out", default=None, help="输出目录（默认 output.dir 或 output/<日期>/<时间>）")
    parser.add_argument("--jobs", type=int, default=1, help="扫描并行度，默认 1")

    # 子命令后也接受同样的选项；SUPPRESS 保证未给出时不覆盖顶层的值
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="配置文件路径")
    common.add_argument("--out", default=argparse.SUPPRESS, help="输出目录")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="扫描并行度")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("constants", parents=[common], help="计算 l、C_p、C_*、d1 与质量条件阈值")
    subparsers.add_parser("simulate", parents=[common], help="运行一次模拟并输出轨迹")
    subparsers.add_parser("classify", parents=[common], help="对初值做势阱分类")
    sweep = subparsers.add_parser("sweep", parents=[common], help="按振幅扫描，输出相图 CSV")
    sweep.add_argument("--amplitudes", required=True, help="振幅列表，如 0,0.5,1")
    fit = subparsers.add_parser("fit", parents=[common], help="对轨迹 CSV 做衰减拟合")
    fit.add_argument("trajectory", help="轨迹 CSV 路径")
    return parser


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )


def main(argv: Optional[List[str]] = None) -> int:
    """主程序入口，返回退出码"""
    args = build_parser().parse_args(argv)
    debug_mode = False
    try:
        config = load_config(args.config)
        debug_mode = config["APP"]["DEBUG"]
        _setup_logging(config["APP"]["LOG_LEVEL"])

        runner = ExperimentRunner(config, output_dir=args.out, jobs=args.jobs)
        if args.command == "constants":
            return runner.cmd_constants()
        if args.command == "simulate":
            return runner.cmd_simulate()
        if args.command == "classify":
            return runner.cmd_classify()
        if args.command == "sweep":
            return runner.cmd_sweep(parse_float_list(args.amplitudes, "amplitudes"))
        return runner.cmd_fit(args.trajectory)
    except FileNotFoundError as e:
        print(f"❌ 配置文件错误: {e}")
        print("\n请确保配置文件存在，或通过 --config / CONFIG_PATH 指定")
        return EXIT_INPUT
    except INPUT_ERRORS as e:
        print(f"❌ 输入错误: {e.message}")
        if e.suggestion:
            print(f"   建议: {e.suggestion}")
        return EXIT_INPUT
    except NumericInstabilityError as e:
        print(f"❌ 数值失稳: {e.message}")
        return EXIT_INSTABILITY
    except FitError as e:
        print(f"❌ 衰减拟合失败: {e.message}")
        return EXIT_FIT
    except Exception as e:
        print(f"❌ 程序运行错误: {e}")
        if debug_mode:
            raise
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
