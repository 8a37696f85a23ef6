from latentroute.main import run

raise SystemExit(run())
