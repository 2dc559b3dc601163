"""Source indexing and the code-analysis tool library used by the reasoning agent."""

from .index import (
    ANALYZERS,
    ClassRecord,
    FileRecord,
    MethodRecord,
    Site,
    SourceIndex,
    VariableRecord,
    build_index,
    register_analyzer,
)
from .tools import (
    TOOL_NAMES,
    Tool,
    ToolRegistry,
    analyze_method_details,
    build_registry,
    find_class_loc,
    find_method_in_file,
    find_variable_assignments,
    get_imports,
    identify_class,
    identify_variable,
    trace_method_usage,
    track_variable_dataflow,
)

__all__ = [
    "ANALYZERS",
    "ClassRecord",
    "FileRecord",
    "MethodRecord",
    "Site",
    "SourceIndex",
    "TOOL_NAMES",
    "Tool",
    "ToolRegistry",
    "VariableRecord",
    "analyze_method_details",
    "build_index",
    "build_registry",
    "find_class_loc",
    "find_method_in_file",
    "find_variable_assignments",
    "get_imports",
    "identify_class",
    "identify_variable",
    "register_analyzer",
    "trace_method_usage",
    "track_variable_dataflow",
]
