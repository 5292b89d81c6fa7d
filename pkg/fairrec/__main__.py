from fairrec.experiments.cli import main


raise SystemExit(main())
