"""
Chart and PDF export of sweep reports.
"""

import logging
from io import BytesIO

from PIL import Image, ImageDraw, ImageFont
from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.platypus import Image as PdfImage
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from accentcraft.config import APP_NAME

logger = logging.getLogger(__name__)

CHART_SIZE = (900, 560)
MARGIN = 70
PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
           (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127)]


def _font():
    try:
        return ImageFont.truetype("DejaVuSans.ttf", 12)
    except OSError:
        return ImageFont.load_default()


def render_chart(result, title="", width=CHART_SIZE[0], height=CHART_SIZE[1]):
    """
    Draw the report series as a line chart with error bars.

    Args:
        result: Report
        title: Chart title
        width: Image width in pixels
        height: Image height in pixels

    Returns:
        bytes: PNG image data
    """
    image = Image.new("RGB", (width, height), color=(255, 255, 255))
    draw = ImageDraw.Draw(image)
    font = _font()
    points = [(x, mean, std) for series in result.series.values() for x, mean, std in series]
    if not points:
        draw.text((MARGIN, height // 2), "no data", fill=(0, 0, 0), font=font)
    else:
        xs = sorted({p[0] for p in points})
        low = min(min(mean - std for _, mean, std in points), 0.0)
        high = max(mean + std for _, mean, std in points)
        if high == low:
            high = low + 1.0
        plot_w, plot_h = width - 2 * MARGIN, height - 2 * MARGIN

        def to_px(x, y):
            column = xs.index(x)
            px = MARGIN + (column / max(1, len(xs) - 1)) * plot_w
            py = height - MARGIN - (y - low) / (high - low) * plot_h
            return px, py

        draw.rectangle([(MARGIN, MARGIN), (width - MARGIN, height - MARGIN)], outline=(0, 0, 0))
        for x in xs:
            px, _ = to_px(x, low)
            draw.text((px - 6, height - MARGIN + 8), str(x), fill=(0, 0, 0), font=font)
        draw.text((8, MARGIN - 16), f"{high:.2f}", fill=(0, 0, 0), font=font)
        draw.text((8, height - MARGIN - 6), f"{low:.2f}", fill=(0, 0, 0), font=font)

        for number, name in enumerate(sorted(result.series)):
            color = PALETTE[number % len(PALETTE)]
            series = sorted(result.series[name])
            pixels = [to_px(x, mean) for x, mean, _ in series]
            if len(pixels) > 1:
                draw.line(pixels, fill=color, width=2)
            for (x, mean, std), (px, py) in zip(series, pixels):
                if std > 0:
                    draw.line([to_px(x, mean - std), to_px(x, mean + std)], fill=color, width=1)
                draw.ellipse([(px - 3, py - 3), (px + 3, py + 3)], fill=color)
            draw.text((width - MARGIN - 200, MARGIN + 6 + 14 * number), name,
                      fill=color, font=font)
    if title:
        draw.text((MARGIN, 20), title, fill=(0, 0, 0), font=font)

    buffer = BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def save_chart(path, result, title=""):
    with open(path, "wb") as f:
        f.write(render_chart(result, title))


def save_pdf_report(path, result, title="Sweep report", notes=()):
    """
    Write a PDF with the aggregate table and the series chart.

    Args:
        path: Destination PDF path
        result: Report
        title: Document title
        notes: Extra paragraphs (e.g. disjointness findings)
    """
    styles = getSampleStyleSheet()
    story = [Paragraph(title, styles["Title"]),
             Paragraph(f"Generated by {APP_NAME}", styles["Normal"]),
             Spacer(1, 0.4 * cm)]
    for note in notes:
        story.append(Paragraph(note, styles["Normal"]))
    if notes:
        story.append(Spacer(1, 0.4 * cm))

    data = [["condition", "x", "speaker", "metric", "mean ± std", "runs"]]
    for row in result.rows:
        runs = f"{row.aggregate.n_runs}/{row.n_planned}"
        data.append([row.condition, "" if row.x is None else str(row.x), row.speaker, row.metric,
                     f"{row.aggregate.mean:.4f} ± {row.aggregate.std:.4f}", runs])
    table = Table(data, repeatRows=1)
    table.setStyle(TableStyle([
        ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
        ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
        ("FONTSIZE", (0, 0), (-1, -1), 8),
    ]))
    story.append(table)

    if result.series:
        story.append(Spacer(1, 0.6 * cm))
        chart = BytesIO(render_chart(result, title))
        story.append(PdfImage(chart, width=16 * cm, height=16 * cm * CHART_SIZE[1] / CHART_SIZE[0]))

    SimpleDocTemplate(str(path), pagesize=A4, title=title, invariant=1).build(story)
    logger.info("wrote PDF report %s", path)
