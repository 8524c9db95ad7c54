"""Run reports: deterministic JSON with an isolated timing block.

Two runs with identical flags must produce byte-identical JSON except under
the top-level "timing" key, so everything else is built from exact integers,
strings and booleans in a fixed order and serialized canonically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fgl import CheckRow


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def comparable_bytes(report: dict) -> bytes:
    """The byte-determinism surface: canonical JSON without the timing block."""
    return canonical_json(strip_timing(report)).encode()


@dataclass
class RunReport:
    config: dict
    checks: list = field(default_factory=list)
    epsilon_sign: int | None = None
    descent_traces: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def add(self, row: CheckRow):
        self.checks.append(row)

    def extend(self, rows):
        self.checks.extend(rows)

    def filtered(self, name_filter: str | None) -> list:
        if not name_filter:
            return self.checks
        exact = [r for r in self.checks if r.name == name_filter]
        if exact:
            return exact
        return [r for r in self.checks if r.name.startswith(name_filter)]

    def all_ok(self, name_filter: str | None = None) -> bool:
        rows = self.filtered(name_filter)
        return bool(rows) and all(r.ok for r in rows)

    def to_dict(self, name_filter: str | None = None) -> dict:
        rows = self.filtered(name_filter)
        payload = {
            "config": self.config,
            "checks": [
                {
                    "name": r.name,
                    "status": r.status,
                    **({"detail": r.detail} if r.detail else {}),
                    **({"defect": r.defect} if r.defect else {}),
                }
                for r in rows
            ],
            "epsilon_sign": self.epsilon_sign,
            "descent_traces": self.descent_traces,
            "timing": self.timing,
        }
        return payload

    def render_text(self, name_filter: str | None = None) -> str:
        lines = []
        cfg = self.config
        lines.append(
            f"config: p={cfg.get('p')} n={cfg.get('n')} "
            f"x_deg={cfg.get('x_deg')} u_prec={cfg.get('u_prec')}"
        )
        for r in self.filtered(name_filter):
            mark = {"pass": "PASS", "fail": "FAIL", "horizon-flagged": "PASS*"}[r.status]
            line = f"[{mark}] {r.name}"
            if r.detail:
                line += f"  -- {r.detail}"
            if r.defect:
                line += f"  defect: {r.defect}"
            lines.append(line)
        if self.epsilon_sign is not None:
            lines.append(f"epsilon_sign: {self.epsilon_sign:+d}")
        for tr in self.descent_traces:
            steps = " -> ".join(
                f"wt {s['weight']} (a^{s['chosen_index']})" for s in tr["steps"]
            )
            lines.append(
                f"descent from {tr['start']}: {steps or 'already a unit'}"
                f" -> terminal {tr['terminal']}"
            )
        ok = self.all_ok(name_filter)
        lines.append("result: " + ("all checks passed" if ok else "CHECKS FAILED"))
        return "\n".join(lines) + "\n"


def trace_payload(trace) -> dict:
    """JSON form of a DescentTrace; weights as exact 'num/den' strings."""
    return {
        "start": trace.start.render(),
        "steps": [
            {
                "z": s.z.render(),
                "weight": f"{s.weight}/1",
                "chosen_index": s.chosen_index,
                "extracted": s.extracted.render(),
            }
            for s in trace.steps
        ],
        "terminal": trace.terminal.render(),
        "horizon_flagged": trace.horizon_flagged,
    }
