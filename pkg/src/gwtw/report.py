"""CSV writers. Output is byte-stable: fixed 6-digit decimals, '\\n' endings."""
import os

TRACE_HEADER = "time,undecided_fraction,minmax_metric"
OUTCOME_HEADER = "status,convergence_time,seed"
SWEEP_HEADER = ("axis_value,trials,converged_optimal,converged_nonoptimal,timeout,"
                "failure_rate,mean_convergence_time,median_convergence_time")
ORDER_STATS_HEADER = "axis_value,trials,min,p1,p5,p50"


def fmt(x):
    """Reals with 6 fractional digits; None as an empty field."""
    if x is None:
        return ""
    return f"{float(x):.6f}"


def fmt_value(v):
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return fmt(v)


def trace_csv(trace):
    lines = [TRACE_HEADER]
    lines += [f"{fmt(t)},{fmt(u)},{fmt(m)}" for t, u, m in trace]
    return "\n".join(lines) + "\n"


def outcome_csv(outcomes):
    lines = [OUTCOME_HEADER]
    lines += [f"{o.status},{fmt(o.convergence_time)},{o.seed}" for o in outcomes]
    return "\n".join(lines) + "\n"


def sweep_csv(result):
    lines = [SWEEP_HEADER]
    for p in result.points:
        lines.append(",".join([
            fmt_value(p.value), str(p.trials), str(p.converged_optimal),
            str(p.converged_nonoptimal), str(p.timeout), fmt(p.failure_rate),
            fmt(p.mean_time), fmt(p.median_time),
        ]))
    return "\n".join(lines) + "\n"


def order_stats_csv(rows):
    """``rows`` is a list of (axis_value, trials, [min, p1, p5, p50])."""
    lines = [ORDER_STATS_HEADER]
    for value, trials, stats in rows:
        lines.append(",".join([fmt_value(value), str(trials)] + [fmt(s) for s in stats]))
    return "\n".join(lines) + "\n"


def write_files(out_dir, files):
    """Write ``{name: text}`` under ``out_dir`` (created if missing)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
