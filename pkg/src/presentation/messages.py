class CliMessages:

    DESCRIPTION = """Simulate recurrent-event data (calendar or gap timescale, frailty,
event-dependence) and check generated cohorts against analytic oracles."""

    TAXONOMY_HEADER = """Scenario taxonomy: baseline x population x dependence
Each cell lists the scenario keys that select it.
"""

    BATTERY_HEADER = """
Recommended battery (one process per row of a thorough simulation study):"""

    CONFIG_ERROR = "⚠️ Scenario error: {error}"

    EXPLOSION_ERROR = """💥 {error}
Add dependence.cap or lower dependence.alpha / dependence.phi."""

    IO_ERROR = "⚠️ I/O error: {error}"

    INTERNAL_ERROR = """🐞 Internal consistency error: {error}
This is a simulator bug, not a scenario problem."""

    SIMULATION_SUMMARY = "{summary}"

    VALIDATION_FAILED = "❌ {failed} of {total} checks failed"

    BATTERY_WRITTEN = "Wrote {count} scenario files to {directory}"
