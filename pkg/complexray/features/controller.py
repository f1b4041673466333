"""Aggregate all features in a single controller."""

from functools import wraps

from .base import Threads
from .experiment import Exponents, Tolerances
from .inputs import AnalyticPath, ConfigFile, FieldPath, PhantomPath, SinogramPath
from .output import OutputDir, Seed
from .resolution import (
    AngleCount,
    AuditSamples,
    CurveCount,
    GridSize,
    LabelCount,
    Labeling,
    MaskRadius,
    QuadNodes,
)


class FeaturesController:
    """Gateway to a list of features."""
    # pylint: disable=too-many-instance-attributes

    def __init__(self):
        self.analytic = AnalyticPath()
        self.angle_count = AngleCount()
        self.audit_samples = AuditSamples()
        self.config_file = ConfigFile()
        self.curve_count = CurveCount()
        self.exponents = Exponents()
        self.field = FieldPath()
        self.grid_size = GridSize()
        self.label_count = LabelCount()
        self.labeling = Labeling()
        self.mask = MaskRadius()
        self.output_dir = OutputDir()
        self.phantom = PhantomPath()
        self.quad_nodes = QuadNodes()
        self.seed = Seed()
        self.sinogram = SinogramPath()
        self.threads = Threads()
        self.tolerances = Tolerances()
        self._features = [
            self.analytic,
            self.angle_count,
            self.audit_samples,
            self.config_file,
            self.curve_count,
            self.exponents,
            self.field,
            self.grid_size,
            self.label_count,
            self.labeling,
            self.mask,
            self.output_dir,
            self.phantom,
            self.quad_nodes,
            self.seed,
            self.sinogram,
            self.threads,
            self.tolerances,
        ]

    def bind(self, command):
        """Bind all features to click command."""
        @wraps(command)
        def save_command_options(*args, **kwargs):
            """Save option values and call original command without it."""
            for feature in self._features:
                feature.extract_option(kwargs)
            self.config_file.load()
            return command(*args, **kwargs)

        for feature in self._features:
            save_command_options = feature.bind(save_command_options)
        return save_command_options

    def settings(self):
        """Values of every run setting, None where nothing was given."""
        return {
            feature.OPTION_NAME: feature.value
            for feature in self._features
            if feature is not self.config_file
        }

    def output_path(self, file_name):
        """Path of an output file inside the output directory."""
        return self.output_dir.file_path(file_name)
