import logging
from pathlib import Path

from apparent_loci.plugins.base import OutputPlugin
from apparent_loci.protocol import CertificateModel

logger = logging.getLogger("apparent_loci.plugins.output.certificate")


class Plugin(OutputPlugin):
    """
    Writes the certificate JSON. The target is `path` when given (the CLI's
    -o flag), else <output_dir>/<name>.cert.json.
    """

    def run(self, certificate: CertificateModel) -> bool:
        target = self.config.get("path")
        if not target:
            target = Path(self.config.get("output_dir", ".")) / f"{certificate.name}.cert.json"
        target = Path(target)

        if self.dry_run:
            logger.info(f"DRY RUN: Certificate would be written to {target}")
            return True

        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8") as f:
                f.write(certificate.model_dump_json(indent=2))
            logger.info(f"Certificate written to {target}")
            return True
        except Exception as e:
            logger.error(f"Failed to write certificate: {str(e)}")
            return False
