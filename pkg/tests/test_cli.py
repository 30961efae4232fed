import json
import logging

import pytest

from stringtable.cli import TagFilter, build_parser, main


@pytest.fixture(autouse=True)
def _restore_logging():
    logger = logging.getLogger("stringtable")
    handlers, level = list(logger.handlers), logger.level
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)


def test_parser_lists_stages_in_help():
    parser = build_parser()
    assert "symplectic" in parser.epilog
    args = parser.parse_args(["curves", "-c", "run.json", "--grid", "1024", "-v"])
    assert args.command == "curves"
    assert args.config == "run.json"
    assert args.grid == 1024
    assert args.verbose
    assert args.emit_svg is None


def test_tag_filter_uses_module_name():
    record = logging.LogRecord("stringtable.tools.table", logging.INFO, "", 0, "msg", None, None)
    assert TagFilter().filter(record)
    assert record.tag == "table"


def test_circle_table_exits_zero(tmp_path):
    config = tmp_path / "circle.json"
    values = {"tau": 0.0, "ell": 3, "curve_samples": 128, "invariance_stride": 8, "determinant_samples": 2}
    config.write_text(json.dumps(values), encoding="utf-8")
    assert main(["table", "-c", str(config), "-o", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "circle" / "report.json").read_text(encoding="utf-8"))
    assert report["passed"] is True


def test_invalid_config_exits_one(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"variant": "wavy"}), encoding="utf-8")
    assert main(["table", "-c", str(config), "-o", str(tmp_path)]) == 1


def test_string_too_short_exits_one(tmp_path):
    config = tmp_path / "short.json"
    config.write_text(json.dumps({"series": [[3, 0.0, -0.005]], "tau": 100.0, "ell": 10}), encoding="utf-8")
    assert main(["table", "-c", str(config), "-o", str(tmp_path)]) == 1
