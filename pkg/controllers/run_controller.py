import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from datetime import datetime, timezone

import numpy as np
from tqdm import tqdm

from controllers.certificate_controller import CertificateController
from controllers.geometry_controller import GeometryController
from controllers.newton_controller import NewtonController
from models.errors import ConfigError, HypothesisError
from models.fourier import FourierModel, StripSchedule, grid_points, verify_diophantine
from models.ledger import ConditionNumbers, ControlConstants
from models.system import LiftSpec, SystemBounds
from models.systems import build_system, exact_torus

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_DIVERGED = 2
EXIT_CONFIG = 3


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Objeto nao serializavel: {type(value).__name__}")


def dumps(data):
    return json.dumps(data, sort_keys=True, indent=2, default=_json_default)


class RunController:
    """
    Controlador das execuções em lote

    Cada comando monta os objetos a partir da RunConfig, roda a operação,
    grava os artefatos em out_dir e devolve (payload, exit_code).
    Codigos: 0 convergiu/passou, 1 reprovou, 2 divergiu, 3 erro de configuração.
    """

    def __init__(self, config, out_dir, threads=1, seed=None):
        """
        Construtor do controlador

        Args:
            config (RunConfig): configuração ja validada
            out_dir (str): diretorio dos artefatos
            threads (int): trabalhadores do bench
            seed (int, optional): semente que substitui bounds.seed
        """
        self.config = config
        self.out_dir = out_dir
        self.threads = max(1, int(threads))
        self.seed = config["bounds.seed"] if seed is None else int(seed)

    # Montagem dos objetos

    def build_system(self, epsilon=None):
        c = self.config
        epsilon = c["system.epsilon"] if epsilon is None else epsilon
        try:
            return build_system(
                c["system.name"], c["torus.omega"], c["system.radii"], c["system.b"],
                epsilon, c["system.a"], c["system.a3"],
            )
        except ValueError as e:
            raise ConfigError(f"Sistema invalido: {str(e)}") from e

    def build_dio(self):
        c = self.config
        return verify_diophantine(c["torus.omega"], c["diophantine.gamma"], c["diophantine.tau"], c["diophantine.k_max"])

    def build_schedule(self):
        c = self.config
        return StripSchedule(c["strip.rho"], c["strip.rho_inf"], c["strip.delta"])

    def build_bounds(self, system):
        c = self.config
        return SystemBounds.estimate(
            system,
            samples=c["bounds.samples"],
            seed=self.seed,
            margin=c["bounds.margin"],
            overrides=c.bound_overrides(),
            domain_radius=c["bounds.domain_radius"],
            time_radius=c["bounds.time_radius"],
        )

    def build_sigma(self, bounds):
        c = self.config
        data = {
            "sigma_DK": c["sigma.dk"],
            "sigma_DKT": c["sigma.dkt"],
            "sigma_B": c["sigma.b"],
            "sigma_N": c["sigma.n"],
            "sigma_NT": c["sigma.nt"],
            "sigma_Tinv": c["sigma.tinv"],
        }
        is_valid, error_message = ConditionNumbers.validate_data(data)
        if not is_valid:
            raise HypothesisError(error_message)
        return ConditionNumbers(**data, c_xp=bounds.c_xp, c_xpt=bounds.c_xpt)

    def build_controls(self):
        c = self.config
        return ControlConstants(c["control.mu"], c["control.mu_e"], c["control.mu_etan"])

    def build_lift_spec(self, system):
        omega_p = self.config["lift.omega_p"]
        if omega_p is None:
            omega_p = (getattr(system, "discount", 0.0),) * system.moments
        return LiftSpec(omega_p=tuple(omega_p))

    def initial_torus(self, system):
        """Toro exato da familia sem acoplamento"""
        c = self.config
        K0, omega = exact_torus(system.with_epsilon(0.0), c["system.radii"], c["grid.size"], c["grid.cutoffs"])
        if not np.allclose(omega, c["torus.omega"], rtol=0.0, atol=1e-12):
            logger.warning("frequencia do toro inicial %s difere de torus.omega", np.round(omega, 12).tolist())
        return K0

    def load_torus(self, path):
        """Le um artefato FMD1 (.fmd) ou CSV de coeficientes"""
        if not os.path.exists(path):
            raise ConfigError(f"Toro nao encontrado: {path}")
        if path.endswith(".csv"):
            with open(path, "r", encoding="utf-8") as stream:
                return FourierModel.from_csv(stream)
        with open(path, "rb") as stream:
            return FourierModel.from_bytes(stream.read())

    # Artefatos

    def _path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    def write_json(self, name, data, stamped=False):
        """Grava JSON ordenado; com stamped o timestamp fica isolado no cabeçalho"""
        if stamped:
            data = {
                "header": {"timestamp": datetime.now(timezone.utc).isoformat()},
                "data": data,
            }
        with open(self._path(name), "w", encoding="utf-8") as stream:
            stream.write(dumps(data) + "\n")

    def write_torus(self, K):
        with open(self._path("torus.fmd"), "wb") as stream:
            stream.write(K.to_bytes())
        with open(self._path("torus.csv"), "w", encoding="utf-8") as stream:
            K.to_csv(stream)

    def write_csv(self, name, header, rows):
        with open(self._path(name), "w", encoding="utf-8", newline="") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    # Execução

    def _error(self, action, exc):
        logger.error("falha ao %s: %s", action, exc)
        return {
            "success": False,
            "error": f"Erro ao {action}: {str(exc)}",
            "kind": type(exc).__name__,
        }, EXIT_CONFIG

    def _solve(self, system, dio, schedule, bounds, method=None):
        c = self.config
        newton = NewtonController(system, dio, bounds)
        return newton.iterate(
            self.initial_torus(system),
            schedule,
            max_iter=c["solver.max_iter"],
            tol=c["solver.tol"],
            method=method or c["solver.method"],
            norm_rho=c["solver.norm_rho"],
            clean_threshold=c["solver.clean_threshold"],
        )

    def cmd_solve(self):
        """
        Roda o metodo de Newton a partir do toro exato sem acoplamento

        Returns:
            tuple: (payload, exit_code)
        """
        try:
            system = self.build_system()
            dio = self.build_dio()
            schedule = self.build_schedule()
            bounds = self.build_bounds(system)
            result = self._solve(system, dio, schedule, bounds)
        except Exception as e:
            return self._error("resolver o toro", e)

        with open(self._path("iterations.jsonl"), "w", encoding="utf-8") as stream:
            for line in result.to_log():
                stream.write(json.dumps(line, sort_keys=True, default=_json_default) + "\n")
        saved = result.final if result.converged else result.last_good
        self.write_torus(saved.K)
        summary = result.summary() | {
            "saved_iteration": saved.iteration,
            "config": self.config.to_dict(),
            "system": system.to_dict(),
            "schedule": schedule.to_dict(),
        }
        self.write_json("summary.json", summary, stamped=True)

        if result.converged:
            return {
                "success": True,
                "data": summary,
                "message": f"Toro convergiu em {len(result.states) - 1} iterações",
            }, EXIT_OK
        return {
            "success": False,
            "data": summary,
            "error": f"Metodo terminou com veredito {result.verdict}: {result.reason}",
        }, EXIT_DIVERGED

    def _torus_for(self, system, dio, schedule, bounds, torus_path):
        """Toro do artefato, ou o resultado do Newton quando nao ha artefato"""
        path = torus_path or self.config["certificate.torus"]
        if path:
            return self.load_torus(path), None
        result = self._solve(system, dio, schedule, bounds)
        if not result.converged:
            return None, result
        return result.final.K, result

    def cmd_certify(self, torus_path=None):
        """
        Mede o toro, monta as constantes e decide a condição KAM

        Returns:
            tuple: (payload, exit_code)
        """
        c = self.config
        try:
            system = self.build_system()
            dio = self.build_dio()
            schedule = self.build_schedule()
            bounds = self.build_bounds(system)
            sigma = self.build_sigma(bounds)
            controls = self.build_controls()
            K, result = self._torus_for(system, dio, schedule, bounds, torus_path)
            if K is None:
                return {
                    "success": False,
                    "data": result.summary(),
                    "error": f"Sem toro pra certificar: veredito {result.verdict} ({result.reason})",
                }, EXIT_DIVERGED
            certificate = CertificateController(system, dio, bounds, sigma, controls, c["certificate.mode"])
            report, ledger, russ = certificate.certify(
                K, schedule, c["certificate.m"], c["certificate.clean_threshold"]
            )
            history = None
            if result is not None:
                history = certificate.certify_history(
                    result.states, schedule, c["certificate.m"], c["certificate.clean_threshold"]
                )
        except Exception as e:
            return self._error("certificar o toro", e)

        data = report.to_dict() | {
            "russmann": russ.to_dict(),
            "bounds": bounds.to_dict(),
            "sigma": sigma.to_dict(),
            "controls": controls.to_dict(),
            "schedule": schedule.to_dict(),
            "history": history,
        }
        self.write_json("report.json", data)
        self.write_json("ledger.json", ledger.to_dict())
        if report.passed:
            return {
                "success": True,
                "data": data,
                "message": f"Condição KAM satisfeita: V={report.value:.6g}",
            }, EXIT_OK
        return {
            "success": False,
            "data": data,
            "error": f"Condição KAM reprovada: V={report.value:.6g}, termo dominante {report.dominating}",
        }, EXIT_FAIL

    def cmd_lift(self, torus_path=None):
        """
        Levanta o toro pelo fluxo do momento e mede o residuo

        Returns:
            tuple: (payload, exit_code)
        """
        c = self.config
        try:
            system = self.build_system()
            if not system.moments:
                raise ConfigError(f"Sistema {system.name} sem integrais extras: nada pra levantar")
            dio = self.build_dio()
            schedule = self.build_schedule()
            bounds = self.build_bounds(system)
            K, result = self._torus_for(system, dio, schedule, bounds, torus_path)
            if K is None:
                return {
                    "success": False,
                    "data": result.summary(),
                    "error": f"Sem toro pra levantar: veredito {result.verdict} ({result.reason})",
                }, EXIT_DIVERGED

            lifted_system = system.undiscounted() if hasattr(system, "undiscounted") else system
            geometry = GeometryController(lifted_system, bounds)
            lift_spec = self.build_lift_spec(system)
            points = c["lift.s_points"]
            s_grid = np.linspace(0.0, c["lift.s_max"], points)
            cylinder = geometry.lift_cylinder(K, lift_spec, s_grid, dio.omega_array, c["lift.tol"])
            torus = None
            if lifted_system.flow_period is not None:
                torus = geometry.lift_torus(K, lift_spec, points, dio.omega_array, c["lift.tol"])
        except Exception as e:
            return self._error("levantar o toro", e)

        data = {
            "cylinder": cylinder.to_dict(),
            "torus": torus.to_dict() if torus is not None else None,
            "omega": list(dio.omega),
        }
        self.write_json("lift.json", data)
        theta = grid_points(K.grid_size)
        rows = []
        for s, sample in zip(cylinder.s_grid[:, 0], cylinder.samples):
            for point, value in zip(theta, sample):
                rows.append([repr(float(s)), *map(repr, point.tolist()), *map(repr, value.tolist())])
        self.write_csv(
            "lift_slices.csv",
            ["s"] + [f"theta{i + 1}" for i in range(K.dim_d)] + [f"z{i + 1}" for i in range(2 * system.n)],
            rows,
        )

        residual = max(cylinder.residual, torus.residual if torus is not None else 0.0)
        if residual <= c["lift.tol"]:
            return {
                "success": True,
                "data": data,
                "message": f"Levantamento invariante: residuo {residual:.3e}",
            }, EXIT_OK
        return {
            "success": False,
            "data": data,
            "error": f"Residuo do levantamento {residual:.3e} acima de {c['lift.tol']:.1e}",
        }, EXIT_FAIL

    # Bench

    def delta_scan(self):
        """a/delta pra delta em (0, (rho - rho_inf)/3), sem os extremos"""
        c = self.config
        rho, rho_inf, steps = c["strip.rho"], c["strip.rho_inf"], c["bench.delta_steps"]
        width = (rho - rho_inf) / 3.0
        rows = []
        for i in range(1, steps + 1):
            delta = width * i / (steps + 1)
            a = StripSchedule(rho, rho_inf, delta).ratio_a
            rows.append((delta, a, a / delta))
        return rows

    def _scenario(self, epsilon, method, dio, schedule):
        """Um cenario do bench: Newton, certificado e distancia entre as atualizações"""
        c = self.config
        row = {"epsilon": epsilon, "method": method, "verdict": "error", "iterations": 0,
               "eps_final": float("nan"), "order": float("nan"), "V": float("nan"),
               "certified": False, "update_gap": float("nan"), "reason": ""}
        try:
            system = self.build_system(epsilon)
            bounds = self.build_bounds(system)
            newton = NewtonController(system, dio, bounds)
            first = newton.evaluate_state(self.initial_torus(system), schedule.rho0, schedule.delta0,
                                          norm_rho=c["solver.norm_rho"], error_delta=schedule.delta0)
            if first.weighted_error > 0:
                row["update_gap"] = newton.compare_updates(first)
            result = self._solve(system, dio, schedule, bounds, method)
            summary = result.summary()
            row.update(verdict=result.verdict, iterations=summary["iterations"],
                       eps_final=result.final.weighted_error, order=summary["order"], reason=result.reason)
            if result.converged:
                certificate = CertificateController(
                    system, dio, bounds, self.build_sigma(bounds), self.build_controls(), c["certificate.mode"]
                )
                report, _, _ = certificate.certify(
                    result.final.K, schedule, c["certificate.m"], c["certificate.clean_threshold"]
                )
                row.update(V=report.value, certified=report.passed)
        except Exception as e:
            logger.warning("cenario eps=%.3g %s falhou: %s", epsilon, method, e)
            row["reason"] = f"{type(e).__name__}: {str(e)}"
        return row

    def cmd_bench(self):
        """
        Varre epsilon e metodos em paralelo e faz a varredura de delta

        Returns:
            tuple: (payload, exit_code)
        """
        c = self.config
        try:
            dio = self.build_dio()
            schedule = self.build_schedule()
            self.build_controls()
        except Exception as e:
            return self._error("preparar o bench", e)

        scenarios = [(eps, method) for eps in c["bench.epsilons"] for method in c["bench.methods"]]
        rows = []
        if scenarios:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                futures = [pool.submit(self._scenario, eps, method, dio, schedule) for eps, method in scenarios]
                with tqdm(total=len(futures), desc="bench", unit="cenario", ncols=100) as progress_bar:
                    for future in as_completed(futures):
                        rows.append(future.result())
                        progress_bar.update(1)
        rows.sort(key=lambda row: (row["epsilon"], row["method"]))

        columns = ["epsilon", "method", "verdict", "iterations", "eps_final", "order", "V",
                   "certified", "update_gap", "reason"]
        self.write_csv("bench.csv", columns, [[row[key] for key in columns] for row in rows])
        scan = self.delta_scan()
        self.write_csv("delta_scan.csv", ["delta", "a", "a_over_delta"], scan)

        thresholds = {}
        for method in c["bench.methods"]:
            mine = [row for row in rows if row["method"] == method]
            convergent = [row["epsilon"] for row in mine if row["verdict"] == "converged"]
            certified = [row["epsilon"] for row in mine if row["certified"]]
            thresholds[method] = {
                "max_convergent_epsilon": max(convergent) if convergent else None,
                "max_certified_epsilon": max(certified) if certified else None,
            }
        gaps = {}
        for row in rows:
            if row["epsilon"] > 0 and np.isfinite(row["update_gap"]):
                gaps[repr(row["epsilon"])] = row["update_gap"] / row["epsilon"] ** 2
        best = min(scan, key=lambda item: item[2]) if scan else None
        data = {
            "scenarios": rows,
            "thresholds": thresholds,
            "update_gap_over_eps2": gaps,
            "delta_scan_minimum": {"delta": best[0], "a_over_delta": best[2]} if best else None,
            "optimal_delta": (c["strip.rho"] - c["strip.rho_inf"]) / 6.0,
        }
        return {
            "success": True,
            "data": data,
            "message": f"{len(rows)} cenarios, {len(scan)} valores de delta",
        }, EXIT_OK

    def cmd_constants(self):
        """
        Monta o livro-razão das constantes sem precisar de toro

        Returns:
            tuple: (payload, exit_code)
        """
        c = self.config
        try:
            system = self.build_system()
            dio = self.build_dio()
            schedule = self.build_schedule()
            bounds = self.build_bounds(system)
            certificate = CertificateController(
                system, dio, bounds, self.build_sigma(bounds), self.build_controls(), c["certificate.mode"]
            )
            russ = certificate.compute_russmann(schedule.delta0, c["certificate.m"], rho=schedule.rho0)
            ledger = certificate.assemble_tables(schedule.rho0, schedule.delta0, russ)
            final = certificate.final_constants(ledger, schedule)
        except Exception as e:
            return self._error("montar as constantes", e)

        data = {
            "ledger": ledger.to_dict(),
            "final": final.to_dict(),
            "russmann": russ.to_dict(),
            "trace": {label: ledger.trace(label) for label in ledger.labels if label.startswith("C_theo")},
            "schedule": schedule.to_dict(),
            "delta_auto": c["strip.delta_auto"],
        }
        self.write_json("constants.json", data)
        return {
            "success": True,
            "data": data,
            "message": f"{len(ledger)} constantes registradas",
        }, EXIT_OK
