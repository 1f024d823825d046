import math
from typing import Optional

from billiards.variational import mu_p_ball

VERDICT_LABELS = {
    "holds": "holds",
    "fails": "FAILS",
    "equality-within-tol": "equality",
}


def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            return str(value)
        if value != 0 and (abs(value) < 1e-3 or abs(value) >= 1e5):
            return f"{value:.3e}"
        return f"{value:.{digits}f}"
    return str(value)


def _table(headers: list, rows: list) -> str:
    cells = [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    line = "| " + " | ".join(h.ljust(w) for h, w in zip(headers, widths)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    body = ["| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |" for r in cells]
    return "\n".join([line, sep, *body])


def render_solve(result: dict, expected: Optional[float] = None) -> str:
    """벌점 연속법 결과: 길이, 반사 수, 잔차 대 허용오차."""
    if "error" in result:
        return render_error(result)
    checks = result.get("checks", {})
    rows = []
    for key, item in checks.items():
        if isinstance(item, dict):
            rows.append([key, item.get("value"), item.get("tol", "-"), item["passed"]])
    lines = [
        f"## {result.get('mode', 'solve')}: {result['body']['kind']}",
        "",
        f"- length: {_fmt(result['length'])}",
        f"- bounces: {result['bounce_count']}",
        f"- final ε: {_fmt(checks.get('final_epsilon'))}",
    ]
    if expected is not None:
        lines.append(f"- closed form: {_fmt(expected)} (error {_fmt(result['length'] - expected)})")
    if "doubled_length" in result:
        lines.append(f"- doubled length: {_fmt(result['doubled_length'])}")
    if result.get("warnings"):
        lines.append(f"- warnings (advisory): {', '.join(result['warnings'])}")
    lines += ["", _table(["check", "value", "tol", "passed"], rows)]
    return "\n".join(lines)


def render_shoot(result: dict, radius: Optional[float] = None) -> str:
    """사격 궤도 길이. radius 를 주면 원판의 닫힌 꼴 2kr·sin(πj/k) 와 비교합니다."""
    if "error" in result:
        return render_error(result)
    rows = []
    for orbit in result["orbits"]:
        closed = mu_p_ball(radius, orbit["k"], orbit["j"]) if radius else None
        error = None if closed is None else orbit["length"] - closed
        rows.append([orbit["k"], orbit["j"], orbit["length"], closed, error,
                     orbit["reflection"]["max_residual"], orbit["passed"]])
    for failure in result.get("failures", []):
        rows.append([failure["k"], failure["j"], None, None, None, None,
                     failure["error"]["kind"]])
    headers = ["k", "j", "length", "closed form", "error", "residual", "passed"]
    return "\n".join([f"## shoot: {result['body']['kind']}", "", _table(headers, rows)])


def render_inequalities(result: dict) -> str:
    """μ_P 추정치와 부등식 판정 표."""
    if "error" in result:
        return render_error(result)
    est_rows = [
        [e["name"], e.get("mu"), e.get("method"), e["inradius"], e["width"]]
        for e in result["estimates"]
    ]
    rep_rows = [
        [r["name"], r["subject"], r["lhs"], r["rhs"], r["slack"], VERDICT_LABELS[r["verdict"]]]
        for r in result["reports"]
    ]
    return "\n".join([
        "## μ_P estimates",
        "",
        _table(["body", "μ_P", "method", "inradius", "width"], est_rows),
        "",
        "## inequalities",
        "",
        _table(["inequality", "subject", "lhs", "rhs", "slack", "verdict"], rep_rows),
    ])


def render_geometry(result: dict) -> str:
    if "error" in result:
        return render_error(result)
    rows = [
        ["width", result["width"]],
        ["inradius", result["inradius"]],
        ["extent", result["extent"]],
        ["default δ", result["default_delta"]],
        ["slab orbit", result["slab_orbit_length"]],
        ["bouncing balls", result["bouncing_ball_count"]],
        ["2r = wid", result["ghomi_equality_expected"]],
    ]
    title = f"## geometry: {result['body']['kind']}"
    return "\n".join([title, "", _table(["quantity", "value"], rows)])


def render_verify(result: dict) -> str:
    if "error" in result:
        return render_error(result)
    reflection = result["reflection"]
    rows = [
        ["kind", result["kind"]],
        ["length", result["length"]],
        ["bounces", result["bounce_count"]],
        ["reflection residual", reflection["max_residual"]],
        ["P⁺ member", result["p_plus"]["member"]],
        ["P⁺ margin", result["p_plus"]["margin"]],
        ["certificate", result["certificate"]["accepted"]],
        ["passed", result["passed"]],
    ]
    return "\n".join(["## verify", "", _table(["quantity", "value"], rows)])


def headline(result: dict) -> str:
    """한 줄 요약. 예) "disc: μ_P = 4.000 ± 1e-02, Ghomi: equality"."""
    if "error" in result:
        return f"{result['error'].get('kind', 'error')}: {result['error']['message']}"
    mode = result.get("mode")
    if mode == "inequalities":
        parts = []
        ghomi = {r["subject"]: r for r in result["reports"] if r["name"] == "ghomi"}
        for e in result["estimates"]:
            label = VERDICT_LABELS[ghomi[e["name"]]["verdict"]] if e["name"] in ghomi else "-"
            parts.append(f"{e['name']}: μ_P = {_fmt(e.get('mu'), 3)}, Ghomi: {label}")
        return "; ".join(parts)
    if mode in ("solve", "brake"):
        tol = result["checks"]["potential_ratio"]["value"]
        return f"{mode}: length = {_fmt(result['length'], 3)} (potential ratio {_fmt(tol)})"
    if mode == "shoot":
        return "shoot: " + ", ".join(f"k={o['k']} {_fmt(o['length'])}" for o in result["orbits"])
    if mode == "verify":
        passed = _fmt(result["passed"])
        return f"verify: {result['kind']} length {_fmt(result['length'])}, passed {passed}"
    if mode == "geom":
        return f"geom: width {_fmt(result['width'])}, inradius {_fmt(result['inradius'])}"
    return str(mode)


def render_error(result: dict) -> str:
    error = result["error"]
    lines = [f"## error ({error.get('kind', 'unknown')}, status {error.get('status')})", "",
             error["message"]]
    for key, value in sorted(error.get("details", {}).items()):
        lines.append(f"- {key}: {value}")
    return "\n".join(lines)


RENDERERS = {
    "solve": render_solve,
    "brake": render_solve,
    "shoot": render_shoot,
    "inequalities": render_inequalities,
    "geom": render_geometry,
    "verify": render_verify,
}


def render(result: dict) -> str:
    if "error" in result:
        return render_error(result)
    renderer = RENDERERS.get(result.get("mode"))
    if renderer is None:
        return headline(result)
    return renderer(result)
