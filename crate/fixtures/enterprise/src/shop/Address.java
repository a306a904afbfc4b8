package shop;

public class Address {

    public String city;
}
