from dyadic_cz.cli_interface import main


main(prog_name="dyadic_cz")
