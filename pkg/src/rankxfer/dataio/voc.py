"""Read-only parsing of PASCAL VOC annotation XML."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from ..errors import ParseError
from ..geometry import BBox


def _text(node, tag, path):
    child = node.find(tag)
    if child is None or child.text is None:
        raise ParseError(f"{path}: <{node.tag}> lacks <{tag}>")
    return child.text.strip()


def parse_voc_annotation(xml_path):
    """Return ``(boxes, names, difficult)`` with one entry per ``<object>``.

    VOC boxes are inclusive pixel ranges; they are shifted to half-open
    boxes by adding one to the maximum coordinates.
    """
    try:
        root = ET.parse(xml_path).getroot()
    except (ET.ParseError, OSError) as exc:
        raise ParseError(f"{xml_path}: {exc}") from None
    boxes, names, difficult = [], [], []
    for obj in root.iter("object"):
        bnd = obj.find("bndbox")
        if bnd is None:
            raise ParseError(f"{xml_path}: <object> lacks <bndbox>")
        try:
            coords = [float(_text(bnd, t, xml_path)) for t in ("xmin", "ymin", "xmax", "ymax")]
            box = BBox.from_inclusive(*coords)
        except ValueError as exc:
            raise ParseError(f"{xml_path}: bad bndbox: {exc}") from None
        flag = obj.find("difficult")
        boxes.append(box)
        names.append(_text(obj, "name", xml_path))
        difficult.append(flag is not None and (flag.text or "0").strip() == "1")
    return boxes, names, difficult
