"""Builds the .pptx fixtures used by the ingest tests.

Run from this directory with python-pptx 1.0.x installed:

    python3 make_fixtures.py

The decks are written with python-pptx (which starts from PowerPoint's
default template) so the reader is exercised on XML it did not produce.
"""
import io
import struct
import zipfile
import zlib

from pptx import Presentation
from pptx.chart.data import CategoryChartData
from pptx.dml.color import RGBColor
from pptx.enum.chart import XL_CHART_TYPE
from pptx.enum.dml import MSO_PATTERN
from pptx.enum.shapes import MSO_CONNECTOR, MSO_SHAPE
from pptx.enum.text import PP_ALIGN
from pptx.util import Emu, Pt

W, H = 12192000, 6858000
BLANK = 6


def png_bytes(w=4, h=4, rgb=(200, 80, 40)):
    raw = b"".join(b"\x00" + bytes(rgb) * w for _ in range(h))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b"")


def deck():
    prs = Presentation()
    prs.slide_width = Emu(W)
    prs.slide_height = Emu(H)
    return prs


def style_run(run, text, font, size, rgb):
    run.text = text
    run.font.name = font
    run.font.size = Pt(size)
    run.font.color.rgb = RGBColor.from_string(rgb)


def text_box(slide, x, y, w, h, text, font="Georgia", size=24, rgb="1F2A44", align=None):
    tb = slide.shapes.add_textbox(Emu(x), Emu(y), Emu(w), Emu(h))
    p = tb.text_frame.paragraphs[0]
    style_run(p.add_run(), text, font, size, rgb)
    if align is not None:
        p.alignment = align
    return tb


def solid(shape, rgb):
    shape.fill.solid()
    shape.fill.fore_color.rgb = RGBColor.from_string(rgb)
    shape.line.fill.background()


def one_textbox():
    prs = deck()
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, 914400, 914400, 5486400, 914400, "Hello world", font="Georgia", size=32, rgb="1F2A44")
    prs.core_properties.title = "One text box"
    prs.save("pptx/one_textbox.pptx")


def with_chart():
    prs = deck()
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, 609600, 457200, 10972800, 914400, "Quarterly revenue", font="Georgia", size=36)
    data = CategoryChartData()
    data.categories = ["Q1", "Q2", "Q3"]
    data.add_series("Revenue", (1.0, 2.5, 3.1))
    s.shapes.add_chart(XL_CHART_TYPE.COLUMN_CLUSTERED, Emu(609600), Emu(1600200), Emu(6096000), Emu(4572000), data)
    prs.save("pptx/chart.pptx")


def with_table():
    prs = deck()
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, 609600, 457200, 10972800, 914400, "Plan", font="Georgia", size=36)
    s.shapes.add_table(3, 3, Emu(609600), Emu(1600200), Emu(6096000), Emu(2286000))
    prs.save("pptx/table.pptx")


PALETTE = ["1F4E79", "F2A900", "2E8B57", "C0392B"]


def corpus():
    """Ten designed slides: aligned columns, a consistent palette, non-default fonts."""
    prs = deck()
    prs.core_properties.title = "Fixture corpus"
    margin = 609600
    col_w = 3352800
    gap = 457200

    # 1: title slide with a banner
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    banner = s.shapes.add_shape(MSO_SHAPE.RECTANGLE, 0, 0, Emu(W), Emu(2286000))
    solid(banner, PALETTE[0])
    text_box(s, margin, 685800, 10972800, 1143000, "Annual Review", font="Georgia", size=44, rgb="FFFFFF")
    text_box(s, margin, 2743200, 10972800, 685800, "Growth, people and product", font="Georgia", size=24, rgb="1F4E79")

    # 2: three columns of cards
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Three pillars", font="Georgia", size=36, rgb="1F4E79")
    for i, name in enumerate(["Customers", "Quality", "Speed"]):
        x = margin + i * (col_w + gap)
        card = s.shapes.add_shape(MSO_SHAPE.ROUNDED_RECTANGLE, Emu(x), Emu(1600200), Emu(col_w), Emu(3657600))
        solid(card, PALETTE[i % 4] if i else "F4F6F8")
        p = card.text_frame.paragraphs[0]
        style_run(p.add_run(), name, "Georgia", 20, "1F4E79" if i == 0 else "FFFFFF")
        p.alignment = PP_ALIGN.CENTER

    # 3: gradient background panel and a circle accent, grouped icons
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    panel = s.shapes.add_shape(MSO_SHAPE.RECTANGLE, Emu(margin), Emu(1371600), Emu(10972800), Emu(4572000))
    panel.fill.gradient()
    panel.fill.gradient_stops[0].color.rgb = RGBColor.from_string("1F4E79")
    panel.fill.gradient_stops[1].color.rgb = RGBColor.from_string("2E8B57")
    panel.line.fill.background()
    text_box(s, margin, 457200, 10972800, 914400, "Momentum", font="Georgia", size=36, rgb="1F4E79")
    grp = s.shapes.add_group_shape()
    for i in range(3):
        dot = grp.shapes.add_shape(MSO_SHAPE.OVAL, Emu(1219200 + i * 1828800), Emu(2743200), Emu(914400), Emu(914400))
        solid(dot, PALETTE[1])
    # 4: picture with caption
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Our new office", font="Georgia", size=36, rgb="1F4E79")
    s.shapes.add_picture(io.BytesIO(png_bytes()), Emu(margin), Emu(1600200), Emu(5486400), Emu(3657600))
    text_box(s, 6400800, 1600200, 5181600, 1828800, "Opened in spring with room for 120 people.", font="Georgia", size=18, rgb="333333")

    # 5: multi-run, multi-paragraph body with alignment and spacing
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Highlights", font="Georgia", size=36, rgb="1F4E79")
    body = s.shapes.add_textbox(Emu(margin), Emu(1600200), Emu(10972800), Emu(3657600))
    tf = body.text_frame
    p = tf.paragraphs[0]
    style_run(p.add_run(), "Revenue up ", "Georgia", 20, "333333")
    style_run(p.add_run(), "24%", "Georgia", 20, "C0392B")
    p.line_spacing = 1.5
    p2 = tf.add_paragraph()
    style_run(p2.add_run(), "Two new regions", "Georgia", 20, "333333")

    # 6: pattern fill, arrow and a straight connector
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Process", font="Georgia", size=36, rgb="1F4E79")
    box = s.shapes.add_shape(MSO_SHAPE.RECTANGLE, Emu(margin), Emu(2286000), Emu(col_w), Emu(1828800))
    box.fill.patterned()
    box.fill.pattern = MSO_PATTERN.WIDE_UPWARD_DIAGONAL
    box.fill.fore_color.rgb = RGBColor.from_string("1F4E79")
    box.fill.back_color.rgb = RGBColor.from_string("F4F6F8")
    arrow = s.shapes.add_shape(MSO_SHAPE.RIGHT_ARROW, Emu(margin + col_w + gap), Emu(2743200), Emu(col_w), Emu(914400))
    solid(arrow, PALETTE[1])
    s.shapes.add_connector(MSO_CONNECTOR.STRAIGHT, Emu(margin), Emu(5029200), Emu(margin + 10972800), Emu(5029200))

    # 7: rotated diamond and semi-transparent overlay
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Focus", font="Georgia", size=36, rgb="1F4E79")
    d = s.shapes.add_shape(MSO_SHAPE.DIAMOND, Emu(4572000), Emu(2286000), Emu(2743200), Emu(2743200))
    solid(d, PALETTE[2])
    d.rotation = 15.0
    ov = s.shapes.add_shape(MSO_SHAPE.RECTANGLE, Emu(margin), Emu(5486400), Emu(10972800), Emu(685800))
    solid(ov, PALETTE[0])
    ov.fill._xPr.solidFill.srgbClr.append(ov.fill._xPr.solidFill.srgbClr.makeelement(
        "{http://schemas.openxmlformats.org/drawingml/2006/main}alpha", {"val": "50000"}))

    # 8: title layout with inherited placeholder geometry
    s = prs.slides.add_slide(prs.slide_layouts[0])
    s.shapes.title.text = "Thank you"
    s.placeholders[1].text = "Questions welcome"

    # 9: two columns, right aligned numbers
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "By the numbers", font="Georgia", size=36, rgb="1F4E79")
    for i, (label, value) in enumerate([("Customers", "1,204"), ("Countries", "18")]):
        y = 1600200 + i * 1143000
        text_box(s, margin, y, 5257800, 914400, label, font="Georgia", size=24, rgb="333333")
        text_box(s, 6324600, y, 5257800, 914400, value, font="Georgia", size=24, rgb="C0392B", align=PP_ALIGN.RIGHT)

    # 10: video placeholder (payload is a stub) and chevrons
    s = prs.slides.add_slide(prs.slide_layouts[BLANK])
    text_box(s, margin, 457200, 10972800, 914400, "Roadmap", font="Georgia", size=36, rgb="1F4E79")
    for i in range(3):
        c = s.shapes.add_shape(MSO_SHAPE.CHEVRON, Emu(margin + i * (col_w + gap)), Emu(1600200), Emu(col_w), Emu(914400))
        solid(c, PALETTE[i])
    s.shapes.add_movie(io.BytesIO(b"\x00" * 64), Emu(margin), Emu(2971800), Emu(5486400), Emu(3048000),
                       poster_frame_image=io.BytesIO(png_bytes()), mime_type="video/mp4")
    prs.save("pptx/corpus.pptx")


def broken():
    """corpus.pptx with slide 2's XML truncated."""
    src = zipfile.ZipFile("pptx/corpus.pptx")
    out = zipfile.ZipFile("pptx/broken_slide.pptx", "w", zipfile.ZIP_DEFLATED)
    for info in src.infolist():
        data = src.read(info.filename)
        if info.filename == "ppt/slides/slide2.xml":
            data = data[: len(data) // 2]
        out.writestr(info, data)
    out.close()


if __name__ == "__main__":
    one_textbox()
    with_chart()
    with_table()
    corpus()
    broken()
    with open("pptx/not_a_deck.pptx", "wb") as f:
        f.write(b"this is plain text, not a zip archive\n")
    zipfile.ZipFile("pptx/empty.zip", "w").close()
