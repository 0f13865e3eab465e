from tmkit.export.dot import PALETTE, export_dot, node_id
from tmkit.export.json_io import SCHEMA_VERSION, SchemaError, export_json, import_json, model_to_dict
from tmkit.export.render import render_dsl

__all__ = [
    "PALETTE", "SCHEMA_VERSION", "SchemaError", "export_dot", "export_json",
    "import_json", "model_to_dict", "node_id", "render_dsl",
]
