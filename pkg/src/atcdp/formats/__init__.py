from atcdp.formats.annotation import (
    AnnotationDoc,
    AnnSegment,
    Flags,
    parse_annotation_xml,
    read_annotation_file,
    write_annotation_xml,
)
from atcdp.formats.cnet import (
    Alternative,
    Bin,
    ConfusionNetwork,
    parse_cnet,
    read_cnet_file,
    write_cnet,
    write_cnet_file,
)
from atcdp.formats.rttm import RttmSegment, parse_rttm, read_rttm_file, write_rttm
from atcdp.formats.settings import JobSettings, apply_env_overrides, parse_job_settings, read_job_settings

__all__ = [
    "Alternative", "AnnSegment", "AnnotationDoc", "Bin", "ConfusionNetwork", "Flags",
    "JobSettings", "RttmSegment", "apply_env_overrides", "parse_annotation_xml",
    "parse_cnet", "parse_job_settings", "parse_rttm", "read_annotation_file",
    "read_cnet_file", "read_job_settings", "read_rttm_file", "write_annotation_xml",
    "write_cnet", "write_cnet_file", "write_rttm",
]
