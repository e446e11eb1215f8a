"""
Run provenance and text reports.

Results files start with a header describing the run (package and python
versions, platform, every configuration value); the evaluation prints a
table with one column per sequence. Both are rendered with jinja2.
"""

import datetime
import platform
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as package_version

from jinja2 import Template

# Name of the package (for version)
PACKAGE_NAME = 'evmotion'


SYSTEM_NAMES = {'Darwin': 'MacOs'}


def evmotion_version() -> str:
    "Version of the installed package (or of the source tree)"
    try:
        return package_version(PACKAGE_NAME)
    except PackageNotFoundError:
        from evmotion import __version__
        return __version__


def environment() -> dict:
    "Provenance of a run: package, python and platform"
    system = platform.system() or '<UNKNOWN>'
    return {
        'package': PACKAGE_NAME,
        'version': evmotion_version(),
        'python': platform.python_version(),
        'system': SYSTEM_NAMES.get(system, system),
        'system_version': platform.mac_ver()[0] or platform.release(),
    }


# ---------------------------------
# Templates
# ---------------------------------

HEADER_TEMPLATE = Template("""\
# {{ title }}
# {{ env.package }} {{ env.version }}, python {{ env.python }}, \
{{ env.system }} {{ env.system_version }}{% if timestamp %}, {{ timestamp }}{% endif %}
{% for key, value in config | dictsort %}\
# {{ key }} = {{ value }}
{% endfor %}""")

TABLE_TEMPLATE = Template("""\
{% for row in rows %}\
{% for cell in row %}{{ cell.ljust(widths[loop.index0]) }}\
{% if not loop.last %} | {% endif %}{% endfor %}
{% if loop.first %}{% for width in widths %}{{ '-' * width }}\
{% if not loop.last %}-+-{% endif %}{% endfor %}
{% endif %}{% endfor %}""")


def results_header(title: str, config: dict, timestamp: bool = False) -> list:
    """
    Header lines ('#'-prefixed) for a results file.
    Without timestamp, identical runs produce identical files.
    """
    stamp = datetime.datetime.now().isoformat(timespec='seconds') \
        if timestamp else ''
    text = HEADER_TEMPLATE.render(title=title, env=environment(),
                                  config=dict(config), timestamp=stamp)
    return text.splitlines()


def make_table(rows, header) -> str:
    "Produce a plain-text table"
    rows = [[str(cell) for cell in header]] + \
        [[str(cell) for cell in row] for row in rows]
    widths = [max(len(row[k]) for row in rows if k < len(row))
              for k in range(len(rows[0]))]
    return TABLE_TEMPLATE.render(rows=rows, widths=widths)


def success_table(rates: dict) -> str:
    "Success rate per sequence, sequences as columns"
    return make_table([['Success Rate'] + ['%.2f%%' % rate
                                           for rate in rates.values()]],
                      header=['Sequence'] + list(rates))
