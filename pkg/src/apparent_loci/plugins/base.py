from abc import ABC, abstractmethod
from typing import Any, Dict

from apparent_loci.protocol import CertificateModel


class OutputPlugin(ABC):
    """
    Base class for all apparent-loci output plugins.
    Each plugin should be placed in its own directory under plugins/output/.
    """

    def __init__(self, config: Dict[str, Any], dry_run: bool = False):
        """
        Initializes the plugin with its configuration block from the
        settings YAML, completed by the engine with `output_dir`.
        """
        self.config = config
        self.dry_run = dry_run

    @abstractmethod
    def run(self, certificate: CertificateModel) -> bool:
        """
        Receives a verified certificate and writes something from it.

        Returns:
            bool: True if the plugin executed successfully, False otherwise.
        """
        pass
