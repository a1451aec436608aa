import csv

from refnav.agents import run_suite, shortest_agent, stopnow_agent
from refnav.reporting import (
    format_report_rows,
    render_text_table,
    save_loss_curve_figure,
    save_metrics_figure,
    write_report_bundle,
    write_report_csv,
)


def reports_fixture(small_suite):
    return {
        "shortest": run_suite(small_suite, shortest_agent())[0],
        "stopnow": run_suite(small_suite, stopnow_agent())[0],
    }


class TestReporting:
    def test_csv_and_text_agree_field_by_field(self, tmp_path, small_suite):
        reports = reports_fixture(small_suite)
        csv_path = tmp_path / "report.csv"
        write_report_csv(csv_path, reports)
        with open(csv_path, newline="") as f:
            rows = list(csv.reader(f))
        text = render_text_table(reports)
        text_rows = [line.split() for line in text.splitlines()
                     if line and not set(line) <= {"-", " "}]
        # normalize: text header has multi-word column names
        assert rows[0] == ["Agent", "Succ.", "OSucc.", "SPL", "Length", "Grounding Succ."]
        for csv_row, text_row in zip(rows[1:], text_rows[1:]):
            # text rows: agent + 5 numbers (Grounding Succ. has no space in values)
            assert csv_row[0] == text_row[0]
            assert csv_row[1:] == text_row[1:]

    def test_bundle_writes_csv_text_figure(self, tmp_path, small_suite):
        reports = reports_fixture(small_suite)
        paths = write_report_bundle(tmp_path / "out", reports)
        assert paths["csv"].exists()
        assert paths["text"].exists()
        assert paths["figure"].exists()
        assert paths["figure"].stat().st_size > 1000  # a real png

    def test_loss_curve_figure(self, tmp_path):
        curve = [("pointer", 0, 1.5), ("pointer", 1, 1.1),
                 ("navigator", 0, 2.4), ("navigator", 1, 2.0)]
        out = tmp_path / "loss.png"
        save_loss_curve_figure(out, curve)
        assert out.exists() and out.stat().st_size > 1000

    def test_rows_sorted_by_agent(self, small_suite):
        reports = reports_fixture(small_suite)
        rows = format_report_rows(reports)
        assert [r[0] for r in rows] == sorted(r[0] for r in rows)
