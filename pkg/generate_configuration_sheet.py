#!/usr/bin/env python3
"""
Generate a Configuration Overview Excel spreadsheet from a JSON report.
One row per configuration, one column per requirement path; each cell names
the chosen implementation. Inactive paths are shown as "—".
Color-coded per implementation for easy reading.
"""
import sys

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side

from emit import parse_report

INACTIVE = "—"

# Cycled per implementation, in order of first appearance
PALETTE = ["DEEBF7", "E2F0D9", "FFF2CC", "FCE4D6", "EDE1F5", "DDEBF0"]


def configuration_table(configurations):
    """Wide DataFrame: rows are configurations, columns are paths in order of first appearance."""
    paths = []
    for cfg in configurations:
        for path in cfg.paths():
            if path not in paths:
                paths.append(path)
    rows = []
    for idx, cfg in enumerate(configurations, start=1):
        chosen = cfg.as_dict()
        row = {"Configuration": idx}
        for path in paths:
            row[path] = chosen.get(path, INACTIVE)
        rows.append(row)
    return pd.DataFrame(rows, columns=["Configuration"] + paths)


def implementation_fills(df):
    impls = []
    for col in df.columns[1:]:
        for value in df[col]:
            if value != INACTIVE and value not in impls:
                impls.append(value)
    return {
        impl: PatternFill(start_color=PALETTE[i % len(PALETTE)], end_color=PALETTE[i % len(PALETTE)],
                          fill_type="solid")
        for i, impl in enumerate(impls)
    }


def generate_configuration_sheet(configurations, output_file="Configurations.xlsx"):
    df = configuration_table(configurations)
    print(f"Generated table with {len(df)} configurations and {len(df.columns) - 1} paths")

    wb = Workbook()
    ws = wb.active
    ws.title = "Configurations"
    ws.append(list(df.columns))

    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF", size=11)
    header_alignment = Alignment(horizontal="center", vertical="center", wrap_text=True)
    for cell in ws[1]:
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = header_alignment

    for _, row in df.iterrows():
        ws.append(list(row))

    fills = implementation_fills(df)
    font_inactive = Font(bold=False, size=10, color="808080")
    center_alignment = Alignment(horizontal="center", vertical="center")
    thin_border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    for row_idx in range(2, ws.max_row + 1):
        for col_idx in range(1, ws.max_column + 1):
            cell = ws.cell(row=row_idx, column=col_idx)
            cell.alignment = center_alignment
            cell.border = thin_border
            if col_idx == 1:
                cell.font = Font(bold=True, size=10)
                continue
            value = str(cell.value or "")
            if value == INACTIVE:
                cell.font = font_inactive
            elif value in fills:
                cell.fill = fills[value]

    ws.column_dimensions['A'].width = 15
    for col_idx in range(2, ws.max_column + 1):
        col_letter = ws.cell(row=1, column=col_idx).column_letter
        ws.column_dimensions[col_letter].width = 18

    ws.freeze_panes = "B2"
    wb.save(output_file)
    print(f"✓ Saved configuration sheet to {output_file}")
    return output_file


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) not in (1, 2):
        print("usage: generate_configuration_sheet.py REPORT.json [OUTPUT.xlsx]")
        return 3
    with open(argv[0], encoding="utf-8") as fh:
        configurations = parse_report(fh.read())
    generate_configuration_sheet(configurations, *argv[1:])
    return 0


if __name__ == "__main__":
    sys.exit(main())
