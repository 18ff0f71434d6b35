"""Two agents attempt the same episode; one of them asks first.

Runs the negation environment twice: a greedy script that grabs the
nearest utterance match, and the planner oracle that clarifies before
touching anything. Prints both transcripts from the trial logs.
"""

from __future__ import annotations

from epiplan.runtime import PlannerOracle, ScriptedPolicy, greedy_script, run_trial
from epiplan.scenarios import build_scenario


def show(log) -> None:
    print(f"policy: {log.policy}")
    for step in log.steps:
        print(f"  [{step.index}] sees: {step.observation}")
        verdict = "" if step.accepted else "  (rejected)"
        print(f"      {step.action_text}{verdict}")
        if step.director_answer:
            print(f'      Director: "{step.director_answer}"')
        if step.feedback:
            print(f"      feedback: {step.feedback}")
    print(f"  outcome: {log.outcome} "
          f"(first take {log.first_take}, {log.n_steps} steps, {log.n_asks} asks)")
    print()


def main() -> None:
    scenario = build_scenario("not")
    print(f'Director says: "{scenario.director_utterance}"')
    print(f"The right item is {scenario.target_id}, "
          f"outside the Matcher's starting view.")
    print()

    greedy = ScriptedPolicy(greedy_script(scenario), label="Greedy")
    show(run_trial(scenario, greedy))

    show(run_trial(scenario, PlannerOracle(scenario)))


if __name__ == "__main__":
    main()
