def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            lines.append((props.get("criterion", 0), outcome.upper()[:4] if outcome == "failed" else "PASS",
                          rep.nodeid.split("::")[-1], props.get("measured", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, name, measured in sorted(lines):
        terminalreporter.write_line(f"criterion {num}: {status}  {name}  {measured}".rstrip())
