import logging
from pathlib import Path
from typing import Any, Dict, List

from apparent_loci.plugins.base import OutputPlugin
from apparent_loci.protocol import CertificateModel, curve_from_model
from apparent_loci.templating import function_label, render_report

logger = logging.getLogger("apparent_loci.plugins.output.report")


class Plugin(OutputPlugin):
    """
    Report Output Plugin.
    Renders a Markdown summary of a certificate next to the certificate JSON.
    """

    def run(self, certificate: CertificateModel) -> bool:
        template_name = self.config.get("template_name", "report.md.j2")
        template_dir = self.config.get("template_dir")

        # Resolve template directory:
        # 1. Config override
        # 2. Default to the plugin's own directory
        if not template_dir:
            template_dir = str(Path(__file__).parent)

        report_file = Path(self.config.get("output_dir", ".")) / f"{certificate.name}.report.md"

        if self.dry_run:
            logger.info(f"DRY RUN: Report would be generated at {report_file}")
            return True

        try:
            context = {
                "name": certificate.name,
                "curve": str(curve_from_model(certificate.curve)),
                "genus": certificate.genus,
                "p": certificate.p,
                "basepoint": certificate.basepoint,
                "count": certificate.count,
                "bound": certificate.bound,
                "bad_set": certificate.bad_set,
                "recurrence_log": certificate.recurrence_log,
                "checks": certificate.checks,
                "passed": certificate.passed,
                "change_of_basis": self._matrix_lines(certificate.change_of_basis),
                "conventions": certificate.conventions,
            }
            content = render_report(template_name, template_dir, context)

            report_file.parent.mkdir(parents=True, exist_ok=True)
            with open(report_file, "w", encoding="utf-8") as f:
                f.write(content)

            logger.info(f"Report successfully generated: {report_file}")
            return True

        except Exception as e:
            logger.error(f"Failed to generate report: {str(e)}")
            return False

    def _matrix_lines(self, rows) -> List[Dict[str, Any]]:
        return [{"index": i + 1, "entries": [function_label(u) for u in row]} for i, row in enumerate(rows)]
