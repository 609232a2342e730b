from hopfstraight.cli import main


raise SystemExit(main())
