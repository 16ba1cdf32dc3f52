import io
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from ruamel.yaml import YAML
from ruamel.yaml.comments import CommentedMap, CommentedSeq

from core.data_manager import atomic_write_text
from core.models import ModelSpec

logger = logging.getLogger(__name__)


def _flow_matrix(m: np.ndarray) -> CommentedSeq:
    rows = CommentedSeq()
    for row in np.asarray(m, dtype=float):
        flow = CommentedSeq([float(v) for v in row])
        flow.fa.set_flow_style()
        rows.append(flow)
    return rows


class YAMLGenerator:
    """
    Writes model specs as commented YAML using ruamel.yaml.
    """
    def __init__(self):
        self.yaml = YAML()
        self.yaml.indent(mapping=2, sequence=4, offset=2)

    def render_spec(self, spec: ModelSpec, term_notes: Optional[List[str]] = None,
                    header: Optional[List[str]] = None) -> str:
        """Spec as YAML text; term_notes become end-of-line comments on the A entries."""
        doc = CommentedMap()
        doc["d"] = spec.d
        doc["l"] = spec.l

        terms = CommentedSeq([_flow_matrix(a) for a in spec.A])
        for i, note in enumerate(term_notes or []):
            if note:
                terms.yaml_add_eol_comment(note, i)
        doc["A"] = terms
        doc["C"] = _flow_matrix(spec.C)
        doc["A0"] = None if spec.A0 is None else _flow_matrix(spec.A0)

        buffer = io.StringIO()
        for line in header or []:
            buffer.write(f"# {line}\n")
        self.yaml.dump(doc, buffer)
        return buffer.getvalue()

    def generate_spec(self, spec: ModelSpec, filename: str, term_notes: Optional[List[str]] = None,
                      header: Optional[List[str]] = None) -> str:
        """Writes the spec YAML atomically and returns the path."""
        output_file = Path(filename)
        atomic_write_text(output_file, self.render_spec(spec, term_notes, header))
        logger.info(f"Spec YAML written to {output_file}")
        return str(output_file)
