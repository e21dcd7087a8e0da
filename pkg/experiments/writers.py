"""Gravação dos resultados em CSV ou JSON, sempre com ``manifest.json``."""
import csv
import json
import logging
from functools import partial
from pathlib import Path

logger = logging.getLogger(__name__)

CURVE_FILES = (("msd_curves.csv", "msd_db"), ("mse_curves.csv", "mse_db"))
SUMMARY_COLUMNS = (
    "algorithm",
    "component",
    "steady_state_msd_db",
    "mean_fpi_count",
    "wallclock_sec",
    "mean_fpi_forward",
)


def number(value):
    return "" if value is None else repr(float(value))


def curve_rows(result, attribute):
    curves = getattr(result, attribute)
    labels = result.labels
    for name in result.algorithms:
        for step, row in enumerate(curves[name], start=1):
            for label, value in zip(labels, row):
                yield [step, name, label, number(value)]


def summary_values(result):
    for name in result.algorithms:
        for label, value in zip(result.labels, result.steady_state[name]):
            yield (
                name,
                label,
                value,
                result.fpi_count[name],
                result.wallclock[name],
                result.fpi_forward[name],
            )


def summary_rows(result):
    for name, label, *values in summary_values(result):
        yield [name, label] + [number(value) for value in values]


def _prefixed(results, rows, swept):
    for value, result in results:
        for row in rows(result):
            yield ([number(value)] + row) if swept else row


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_csv(results, out_dir, swept=False):
    lead = ["value"] if swept else []
    written = []
    for filename, attribute in CURVE_FILES:
        header = lead + ["step", "algorithm", "component", attribute]
        rows = _prefixed(results, partial(curve_rows, attribute=attribute), swept)
        written.append(_write_csv(out_dir / filename, header, rows))
    rows = _prefixed(results, summary_rows, swept)
    written.append(
        _write_csv(out_dir / "summary.csv", lead + list(SUMMARY_COLUMNS), rows)
    )
    return written


def _json_number(value):
    return None if value is None else float(value)


def result_to_dict(result, value=None):
    labels = result.labels

    def curves(attribute):
        data = getattr(result, attribute)
        return {
            name: {
                label: [float(item) for item in data[name][:, column]]
                for column, label in enumerate(labels)
            }
            for name in result.algorithms
        }

    data = {} if value is None else {"value": float(value)}
    data.update(
        {
            "scenario": result.scenario,
            "horizon": result.horizon,
            "runs": result.runs,
            "dropped": result.dropped,
            "failures": result.failures,
            "msd_curves": curves("msd_db"),
            "mse_curves": curves("mse_db"),
            "summary": [
                dict(zip(SUMMARY_COLUMNS, row[:2] + tuple(map(_json_number, row[2:]))))
                for row in summary_values(result)
            ],
        }
    )
    return data


def _write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as json_file:
        json.dump(data, json_file, indent=2, ensure_ascii=False)
        json_file.write("\n")
    return path


def write_json(results, out_dir, swept=False):
    data = {
        "results": [
            result_to_dict(result, value if swept else None)
            for value, result in results
        ]
    }
    return [_write_json(out_dir / "results.json", data)]


def write_outputs(results, out_dir, output_format, manifest, swept=False):
    """Grava ``results`` (pares valor, RunResult) e o manifesto em ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = write_json if output_format == "json" else write_csv
    written = writer(results, out_dir, swept=swept)
    written.append(_write_json(out_dir / "manifest.json", manifest))
    logger.info(f"{len(written)} arquivos gravados em {out_dir}")
    return written
